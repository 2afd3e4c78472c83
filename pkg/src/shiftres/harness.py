"""Sweep runners that regenerate the tuning and time-shift experiments.

Seed ladder: every random stream is drawn from
``SeedSequence([base_seed, stream, index])`` with stream 0 for the reservoir
adjacency, 1 for the chaotic initial condition and 2 for the random shift
vector of ensemble member ``index``. Each sub-experiment can therefore be
rerun on its own.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import TaskDefinition, TimeSeries, get_task, hindmarsh_rose, task_signals
from .errors import (
    BufferExceededError,
    ConfigurationError,
    DivergenceError,
    NumericalError,
    UndefinedErrorMetric,
)
from .readout import DEFAULT_ETA, memory_capacity
from .reservoir import ReservoirConfig, ReservoirTrajectory, drive, shift_buffer
from .timeshift import ShiftVector, evaluate, evaluate_optimized, sample_random_shifts

log = logging.getLogger(__name__)

__all__ = [
    "TASK_PRESETS",
    "ExperimentConfig",
    "SweepRow",
    "SweepResult",
    "seed_sequence",
    "simulate",
    "run_gamma_sweep",
    "run_epsilon_sweep",
    "run_alpha_sweep",
    "run_shift_comparison",
    "run",
    "emit",
    "load_config",
    "CSV_HEADER",
]

STREAM_RESERVOIR = 0
STREAM_INITIAL_CONDITION = 1
STREAM_SHIFTS = 2

# (gamma, epsilon) from the figure captions and from the tuning text, the
# alpha range of each alpha sweep and the alpha of each comparison sweep.
TASK_PRESETS = {
    "lorenz96": {"caption": (0.9, 0.8), "text": (0.9, 0.8), "alpha_max": 5.0, "compare_alpha": 4.0},
    "lorenz": {"caption": (1.3, 2.0), "text": (1.65, 1.0), "alpha_max": 1.0, "compare_alpha": 0.25},
    "hr": {"caption": (1.65, 1.0), "text": (0.9, 0.8), "alpha_max": 3.0, "compare_alpha": 2.5},
}

SWEEPS = ("gamma", "epsilon", "alpha", "compare")

# Largest |tau| admitted for optimized shifts in comparison sweeps (time units).
# Extracted shifts are used as computed wherever the recording allows; this
# margin is simulated around the task phases and anything beyond is clamped.
DEFAULT_OPT_BUFFER = 50.0

CSV_HEADER = [
    "sweep_param", "value", "shift_mode", "mean_delta_tr", "std_delta_tr",
    "mean_delta_ts", "std_delta_ts", "ensemble", "seed",
]

_RECOVERABLE = (DivergenceError, NumericalError, UndefinedErrorMetric)


@dataclass
class ExperimentConfig:
    """Fully resolvable description of one sweep.

    ``None`` fields are filled from the task presets by :meth:`resolved`.
    """

    task: str = "lorenz96"
    sweep: str = "alpha"
    gamma: Optional[float] = None
    epsilon: Optional[float] = None
    alpha: Optional[float] = None
    range_min: Optional[float] = None
    range_max: Optional[float] = None
    steps: Optional[int] = None
    ensemble: int = 50
    n_nodes: int = 100
    dt: float = 0.01
    eta: float = DEFAULT_ETA
    seed: int = 0
    jobs: int = 1
    out: str = "results"
    format: str = "csv"
    preset: str = "caption"
    tau_bar: Optional[float] = None
    t1: Optional[float] = None
    t2: Optional[float] = None
    t3: Optional[float] = None
    mc_lags: int = 300
    hr_current: Optional[float] = None
    opt_buffer: Optional[float] = None

    def resolved(self) -> "ExperimentConfig":
        if self.task not in TASK_PRESETS:
            raise ConfigurationError(f"unknown task {self.task!r}; choose from {sorted(TASK_PRESETS)}")
        if self.sweep not in SWEEPS:
            raise ConfigurationError(f"unknown sweep {self.sweep!r}; choose from {list(SWEEPS)}")
        if self.preset not in ("caption", "text"):
            raise ConfigurationError("preset must be 'caption' or 'text'")
        if self.format not in ("csv", "json"):
            raise ConfigurationError("format must be 'csv' or 'json'")
        preset = TASK_PRESETS[self.task]
        gamma0, eps0 = preset[self.preset]
        c = dataclasses.replace(self)
        task = get_task(self.task)
        c.tau_bar = task.tau_bar if c.tau_bar is None else c.tau_bar
        c.t1 = task.t1 if c.t1 is None else c.t1
        c.t2 = task.t2 if c.t2 is None else c.t2
        c.t3 = task.t3 if c.t3 is None else c.t3
        if self.sweep == "gamma":
            c.epsilon = 1.0 if c.epsilon is None else c.epsilon
            lo, hi, n = 0.1, 5.0, 25
        elif self.sweep == "epsilon":
            c.gamma = gamma0 if c.gamma is None else c.gamma
            lo, hi, n = 0.1, 3.0, 15
        elif self.sweep == "alpha":
            c.gamma = gamma0 if c.gamma is None else c.gamma
            c.epsilon = eps0 if c.epsilon is None else c.epsilon
            lo, hi, n = 0.0, preset["alpha_max"], 21
        else:
            c.epsilon = eps0 if c.epsilon is None else c.epsilon
            c.alpha = preset["compare_alpha"] if c.alpha is None else c.alpha
            c.opt_buffer = DEFAULT_OPT_BUFFER if c.opt_buffer is None else c.opt_buffer
            if c.opt_buffer < 0:
                raise ConfigurationError("opt_buffer must be non-negative")
            lo, hi, n = 0.1, 5.0, 25
        c.range_min = lo if c.range_min is None else c.range_min
        c.range_max = hi if c.range_max is None else c.range_max
        c.steps = n if c.steps is None else c.steps
        if c.steps < 1 or c.range_max < c.range_min:
            raise ConfigurationError("sweep range must be non-empty with a positive step count")
        if c.ensemble < 1 or c.n_nodes < 2 or c.jobs < 1 or c.mc_lags < 1:
            raise ConfigurationError("ensemble, jobs and mc_lags must be >= 1 and n_nodes >= 2")
        if not (c.dt > 0 and c.eta > 0):
            raise ConfigurationError("dt and eta must be positive")
        c.task_definition()
        return c

    def grid(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([float(self.range_min)])
        return np.linspace(self.range_min, self.range_max, self.steps)

    def task_definition(self) -> TaskDefinition:
        task = get_task(self.task)
        changes = {k: getattr(self, k) for k in ("tau_bar", "t1", "t2", "t3") if getattr(self, k) is not None}
        if self.hr_current is not None:
            if self.task != "hr":
                raise ConfigurationError("hr_current only applies to the hr task")
            changes["system"] = hindmarsh_rose(self.hr_current)
        return dataclasses.replace(task, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _coerce(key, raw):
    kind = _FIELD_TYPES[key]
    if raw.lower() in ("none", "null", ""):
        return None
    try:
        if "int" in kind:
            return int(raw)
        if "float" in kind:
            return float(raw)
    except ValueError:
        raise ConfigurationError(f"{key}: cannot parse {raw!r}") from None
    return raw


def load_config(path) -> ExperimentConfig:
    """Read a flat ``key = value`` file (``#`` comments); unknown keys are errors.

    ``range = lo, hi`` is accepted as shorthand for ``range_min``/``range_max``.
    """
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            sep = "=" if "=" in line else ":"
            if sep not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (p.strip() for p in line.split(sep, 1))
            if key == "range":
                parts = [p.strip() for p in raw.split(",")]
                if len(parts) != 2:
                    raise ConfigurationError(f"{path}:{lineno}: range needs two values")
                values["range_min"], values["range_max"] = (_coerce("range_min", p) for p in parts)
                continue
            if key not in _FIELD_TYPES:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, raw)
    return ExperimentConfig(**values)


@dataclass
class SweepRow:
    sweep_param: str
    value: float
    shift_mode: str
    mean_delta_tr: float
    std_delta_tr: float
    mean_delta_ts: float
    std_delta_ts: float
    ensemble: int
    seed: int
    note: str = ""
    extra: dict = field(default_factory=dict)

    def csv_fields(self) -> list:
        return [self.sweep_param, repr(float(self.value)), self.shift_mode,
                repr(float(self.mean_delta_tr)), repr(float(self.std_delta_tr)),
                repr(float(self.mean_delta_ts)), repr(float(self.std_delta_ts)),
                str(self.ensemble), str(self.seed)]


@dataclass
class SweepResult:
    rows: list
    metadata: dict

    def to_dict(self) -> dict:
        return {"metadata": self.metadata, "rows": [dataclasses.asdict(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, d) -> "SweepResult":
        return cls(rows=[SweepRow(**r) for r in d["rows"]], metadata=d["metadata"])

    def select(self, shift_mode: str) -> list:
        return [r for r in self.rows if r.shift_mode == shift_mode]

    def curve(self, key: str, shift_mode: Optional[str] = None) -> tuple[np.ndarray, np.ndarray]:
        rows = self.rows if shift_mode is None else self.select(shift_mode)
        return (np.array([r.value for r in rows]), np.array([getattr(r, key) for r in rows]))


def seed_sequence(base_seed: int, stream: int, index: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(base_seed), stream, index])


def reservoir_for(config: ExperimentConfig, gamma: float, epsilon: float) -> ReservoirConfig:
    return ReservoirConfig.create(N=config.n_nodes, epsilon=epsilon, gamma=gamma, dt=config.dt,
                                  seed=seed_sequence(config.seed, STREAM_RESERVOIR))


def signals_for(config: ExperimentConfig, task: TaskDefinition, buffer: float):
    rng = np.random.default_rng(seed_sequence(config.seed, STREAM_INITIAL_CONDITION))
    return task_signals(task, config.dt, task.t3 + buffer, rng)


def simulate(task: TaskDefinition, reservoir: ReservoirConfig, s: TimeSeries,
             buffer: float) -> ReservoirTrajectory:
    """Drive the reservoir and record ``[t1 - buffer, t3 + buffer]``."""
    return drive(reservoir, s, max(0.0, task.t1 - buffer), task.t3 + buffer)


def _summary(reports, key):
    vals = np.array([getattr(r, key) for r in reports])
    if np.all(vals == vals[0]):
        # identical members (alpha = 0, single runs): avoid a rounding-level spread
        return float(vals[0]), 0.0
    return float(vals.mean()), float(vals.std())


def _row(config, param, value, mode, reports, **extra):
    mtr, str_ = _summary(reports, "delta_tr")
    mts, sts = _summary(reports, "delta_ts")
    return SweepRow(param, float(value), mode, mtr, str_, mts, sts, len(reports), config.seed,
                    extra=extra)


def _failed_row(config, param, value, mode, ensemble, exc):
    nan = float("nan")
    log.warning("%s=%g (%s) failed: %s", param, value, mode, exc)
    return SweepRow(param, float(value), mode, nan, nan, nan, nan, ensemble, config.seed,
                    note=f"{type(exc).__name__}: {exc}")


def _random_ensemble(config, traj, task, g, alpha, **prov):
    reports = []
    for k in range(config.ensemble):
        shifts = sample_random_shifts(traj.states.shape[1], alpha, task.tau_bar,
                                      seed_sequence(config.seed, STREAM_SHIFTS, k))
        reports.append(evaluate(traj, task, g, shifts, config.eta, **prov))
    return reports


def _map(config, fn, items, initializer=None, initargs=()):
    if config.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs, initializer=initializer,
                                 initargs=initargs) as pool:
            return list(pool.map(fn, items))
    if initializer is not None:
        initializer(*initargs)
    return [fn(item) for item in items]


# Worker-level state for grid points; set once per process by _init_worker.
_STATE = {}


def _init_worker(config, task, s, g, traj=None):
    _STATE.update(config=config, task=task, s=s, g=g, traj=traj)


def _gamma_point(gamma):
    config, task, s, g = _STATE["config"], _STATE["task"], _STATE["s"], _STATE["g"]
    try:
        traj = simulate(task, reservoir_for(config, gamma, config.epsilon), s, 0.0)
        rep = evaluate(traj, task, g, None, config.eta, seed=config.seed, gamma=gamma,
                       epsilon=config.epsilon)
        return [_row(config, "gamma", gamma, "none", [rep])]
    except _RECOVERABLE as exc:
        return [_failed_row(config, "gamma", gamma, "none", 1, exc)]


def _epsilon_point(eps):
    config, task, s, g = _STATE["config"], _STATE["task"], _STATE["s"], _STATE["g"]
    try:
        traj = simulate(task, reservoir_for(config, config.gamma, eps), s, 0.0)
        rep = evaluate(traj, task, g, None, config.eta, seed=config.seed, gamma=config.gamma,
                       epsilon=eps)
        mc = memory_capacity(traj, s, (task.t1, task.t2), config.mc_lags, config.eta)
        return [_row(config, "epsilon", eps, "none", [rep], memory_capacity=mc.total,
                     mc_tail_mass=mc.tail_mass, mc_curve=mc.curve.tolist())]
    except _RECOVERABLE as exc:
        return [_failed_row(config, "epsilon", eps, "none", 1, exc)]


def _alpha_point(alpha):
    config, task, g, traj = _STATE["config"], _STATE["task"], _STATE["g"], _STATE["traj"]
    try:
        reports = _random_ensemble(config, traj, task, g, alpha, seed=config.seed,
                                   gamma=config.gamma, epsilon=config.epsilon)
        return [_row(config, "alpha", alpha, "random", reports)]
    except _RECOVERABLE as exc:
        return [_failed_row(config, "alpha", alpha, "random", config.ensemble, exc)]


def _compare_buffer(config, task):
    return max(shift_buffer(config.alpha, task.tau_bar, config.dt), config.opt_buffer)


def _compare_point(gamma):
    config, task, s, g = _STATE["config"], _STATE["task"], _STATE["s"], _STATE["g"]
    buffer = _compare_buffer(config, task)
    prov = dict(seed=config.seed, gamma=gamma, epsilon=config.epsilon)
    try:
        traj = simulate(task, reservoir_for(config, gamma, config.epsilon), s, buffer)
    except _RECOVERABLE as exc:
        return [_failed_row(config, "gamma", gamma, m, n, exc)
                for m, n in (("none", 1), ("random", config.ensemble), ("optimized", 1))]
    rows = []
    try:
        rows.append(_row(config, "gamma", gamma, "none", [evaluate(traj, task, g, None, config.eta, **prov)]))
    except _RECOVERABLE as exc:
        rows.append(_failed_row(config, "gamma", gamma, "none", 1, exc))
    try:
        reports = _random_ensemble(config, traj, task, g, config.alpha, **prov)
        rows.append(_row(config, "gamma", gamma, "random", reports, alpha=config.alpha))
    except _RECOVERABLE as exc:
        rows.append(_failed_row(config, "gamma", gamma, "random", config.ensemble, exc))
    try:
        rep, shifts = evaluate_optimized(traj, task, g, config.eta, config.opt_buffer, **prov)
        rows.append(_row(config, "gamma", gamma, "optimized", [rep],
                         delta_tr_joint=rep.delta_tr_joint, delta_ts_joint=rep.delta_ts_joint,
                         clamp_count=shifts.clamp_count, degenerate_count=shifts.degenerate_count,
                         max_abs_tau=float(np.abs(shifts.taus).max())))
    except _RECOVERABLE as exc:
        rows.append(_failed_row(config, "gamma", gamma, "optimized", 1, exc))
    return rows


def _metadata(config, task, **extra):
    meta = {
        "config": config.to_dict(),
        "task": {
            "name": task.name, "system": task.system.kind.value, "params": task.system.params,
            "input_component": task.input_component, "target_component": task.target_component,
            "t1": task.t1, "t2": task.t2, "t3": task.t3, "tau_bar": task.tau_bar,
        },
        "seed_ladder": "SeedSequence([seed, stream, index]); stream 0 reservoir, "
                       "1 initial condition, 2 shift ensemble member index",
    }
    meta.update(extra)
    return meta


def _flatten(chunks):
    return [row for chunk in chunks for row in chunk]


def _best(rows, key, pick):
    ok = [r for r in rows if math.isfinite(r.extra.get(key, getattr(r, key, float("nan"))))]
    if not ok:
        return None
    vals = [r.extra.get(key, getattr(r, key, None)) for r in ok]
    return ok[int(pick(vals))].value


def run_gamma_sweep(config: ExperimentConfig) -> SweepResult:
    """Baseline training error over a gamma grid at fixed epsilon."""
    config = config.resolved()
    task = config.task_definition()
    s, g = signals_for(config, task, 0.0)
    rows = _flatten(_map(config, _gamma_point, list(config.grid()), _init_worker, (config, task, s, g)))
    return SweepResult(rows, _metadata(config, task, argmin_gamma=_best(rows, "mean_delta_tr", np.argmin)))


def run_epsilon_sweep(config: ExperimentConfig) -> SweepResult:
    """Memory capacity (and baseline errors) over an epsilon grid at fixed gamma."""
    config = config.resolved()
    task = config.task_definition()
    s, g = signals_for(config, task, 0.0)
    rows = _flatten(_map(config, _epsilon_point, list(config.grid()), _init_worker, (config, task, s, g)))
    return SweepResult(rows, _metadata(config, task,
                                       argmax_epsilon=_best(rows, "memory_capacity", np.argmax)))


def run_alpha_sweep(config: ExperimentConfig) -> SweepResult:
    """Random-shift ensembles over an alpha grid, all on one simulation."""
    config = config.resolved()
    task = config.task_definition()
    alphas = list(config.grid())
    buffer = shift_buffer(max(alphas), task.tau_bar, config.dt)
    reservoir = reservoir_for(config, config.gamma, config.epsilon)
    while True:
        s, g = signals_for(config, task, buffer)
        traj = simulate(task, reservoir, s, buffer)
        try:
            rows = _flatten(_map(config, _alpha_point, alphas, _init_worker, (config, task, s, g, traj)))
            break
        except BufferExceededError as exc:
            log.warning("%s; re-simulating with buffer %g", exc, 2 * buffer + config.dt)
            buffer = 2 * buffer + config.dt
    return SweepResult(rows, _metadata(config, task, buffer=buffer,
                                       argmin_alpha=_best(rows, "mean_delta_ts", np.argmin)))


def run_shift_comparison(config: ExperimentConfig) -> SweepResult:
    """No shifts, random ensemble and optimized shifts over a gamma grid."""
    config = config.resolved()
    task = config.task_definition()
    buffer = _compare_buffer(config, task)
    s, g = signals_for(config, task, buffer)
    rows = _flatten(_map(config, _compare_point, list(config.grid()), _init_worker, (config, task, s, g)))
    return SweepResult(rows, _metadata(config, task, buffer=buffer))


_RUNNERS = {
    "gamma": run_gamma_sweep,
    "epsilon": run_epsilon_sweep,
    "alpha": run_alpha_sweep,
    "compare": run_shift_comparison,
}


def run(config: ExperimentConfig) -> SweepResult:
    config = config.resolved()
    return _RUNNERS[config.sweep](config)


def emit(result: SweepResult, out_dir, fmt: str = "csv", name: Optional[str] = None) -> list:
    """Write ``result`` under ``out_dir``; returns the written paths.

    CSV output uses the fixed :data:`CSV_HEADER`; epsilon sweeps also get a
    ``*_mc.csv`` with the memory capacity per grid point.
    """
    if fmt not in ("csv", "json"):
        raise ConfigurationError(f"unknown format {fmt!r}")
    cfg = result.metadata.get("config", {})
    name = name or f"{cfg.get('task', 'sweep')}_{cfg.get('sweep', 'result')}"
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    if fmt == "json":
        path = os.path.join(out_dir, f"{name}.json")
        with open(path, "w") as fh:
            json.dump(result.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")
        return [path]
    path = os.path.join(out_dir, f"{name}.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in result.rows:
            writer.writerow(row.csv_fields())
    paths.append(path)
    mc_rows = [r for r in result.rows if "memory_capacity" in r.extra]
    if mc_rows:
        path = os.path.join(out_dir, f"{name}_mc.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epsilon", "memory_capacity", "mc_tail_mass"])
            for r in mc_rows:
                writer.writerow([repr(r.value), repr(r.extra["memory_capacity"]),
                                 repr(r.extra["mc_tail_mass"])])
        paths.append(path)
    return paths


def load_result(path) -> SweepResult:
    with open(path) as fh:
        return SweepResult.from_dict(json.load(fh))
