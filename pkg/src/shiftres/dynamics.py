"""Chaotic benchmark systems, a fixed-step RK4 integrator and the
autocorrelation half-decay timescale.

The three systems supply the scalar input ``s(t)`` and the training signal
``g(t)`` of each reconstruction task.
"""

from __future__ import annotations

import csv
import enum
import functools
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConfigurationError, DivergenceError, TimescaleUndefinedError

__all__ = [
    "SystemKind",
    "ChaoticSystem",
    "TimeSeries",
    "TaskDefinition",
    "lorenz96",
    "lorenz",
    "hindmarsh_rose",
    "system_rhs",
    "rk4",
    "integrate",
    "autocorrelation_timescale",
    "task_signals",
    "TASKS",
    "get_task",
]


class SystemKind(str, enum.Enum):
    LORENZ96 = "lorenz96"
    LORENZ = "lorenz"
    HINDMARSH_ROSE = "hr"


_DEFAULT_PARAMS = {
    SystemKind.LORENZ96: {"F": 8.0, "M": 4},
    SystemKind.LORENZ: {"c1": 10.0, "c2": 28.0, "c3": 8.0 / 3.0},
    # ``current`` is the constant drive term of the fast equation (1 as printed).
    SystemKind.HINDMARSH_ROSE: {"current": 1.0},
}


@dataclass(frozen=True)
class ChaoticSystem:
    """A chaotic ODE together with its parameter record."""

    kind: SystemKind
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = SystemKind(self.kind)
        object.__setattr__(self, "kind", kind)
        merged = dict(_DEFAULT_PARAMS[kind])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise ConfigurationError(f"unknown {kind.value} parameters: {sorted(unknown)}")
        merged.update(self.params)
        if kind is SystemKind.LORENZ96:
            merged["M"] = int(merged["M"])
            if merged["M"] < 4:
                raise ConfigurationError("Lorenz96 needs M >= 4")
        object.__setattr__(self, "params", merged)

    @property
    def dimension(self) -> int:
        if self.kind is SystemKind.LORENZ96:
            return self.params["M"]
        return 3


def lorenz96(F: float = 8.0, M: int = 4) -> ChaoticSystem:
    return ChaoticSystem(SystemKind.LORENZ96, {"F": F, "M": M})


def lorenz(c1: float = 10.0, c2: float = 28.0, c3: float = 8.0 / 3.0) -> ChaoticSystem:
    return ChaoticSystem(SystemKind.LORENZ, {"c1": c1, "c2": c2, "c3": c3})


def hindmarsh_rose(current: float = 1.0) -> ChaoticSystem:
    return ChaoticSystem(SystemKind.HINDMARSH_ROSE, {"current": current})


@functools.lru_cache(maxsize=None)
def _cyclic_indices(M):
    i = np.arange(M)
    return (i + 1) % M, (i - 1) % M, (i - 2) % M


def _rhs_function(system: ChaoticSystem) -> Callable[[np.ndarray], np.ndarray]:
    p = system.params
    if system.kind is SystemKind.LORENZ96:
        F = float(p["F"])
        ip1, im1, im2 = _cyclic_indices(p["M"])

        def f(x):
            return (x[ip1] - x[im2]) * x[im1] - x + F

    elif system.kind is SystemKind.LORENZ:
        c1, c2, c3 = float(p["c1"]), float(p["c2"]), float(p["c3"])

        def f(s):
            x, y, z = s
            return np.array([c1 * (y - x), x * (c2 - z) - y, x * y - c3 * z])

    elif system.kind is SystemKind.HINDMARSH_ROSE:
        current = float(p["current"])

        def f(s):
            x, y, z = s
            phi = -x**3 + 3.0 * x**2
            psi = 1.0 - 5.0 * x**2
            return np.array([y + phi - z + current, psi - y, 5e-3 * (4.0 * (x + 8.0 / 5.0) - z)])

    else:  # pragma: no cover
        raise ConfigurationError(f"no right-hand side for {system.kind!r}")
    return f


def system_rhs(system: ChaoticSystem, state) -> np.ndarray:
    """Time derivative of ``system`` at ``state``."""
    state = np.asarray(state, dtype=float)
    if state.shape != (system.dimension,):
        raise ConfigurationError(
            f"state has shape {state.shape}, {system.kind.value} expects ({system.dimension},)"
        )
    return _rhs_function(system)(state)


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled (samples x dimension) signal.

    Sample ``k`` sits at ``t_start + k * dt``.
    """

    t_start: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1:
            raise ConfigurationError("TimeSeries values must be a non-empty (samples x dim) array")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "values", values)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t_start + np.arange(self.n_samples) * self.dt

    @property
    def t_end(self) -> float:
        return self.t_start + (self.n_samples - 1) * self.dt

    def index_of(self, t: float) -> int:
        """Sample index of time ``t`` (rounded to the nearest sample)."""
        return int(np.floor((t - self.t_start) / self.dt + 0.5))

    def component(self, i: int) -> "TimeSeries":
        return TimeSeries(self.t_start, self.dt, self.values[:, i].copy())

    def scalar(self) -> np.ndarray:
        if self.dimension != 1:
            raise ConfigurationError(f"expected a scalar series, got dimension {self.dimension}")
        return self.values[:, 0]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"x_{i + 1}" for i in range(self.dimension)])
            for t, row in zip(self.times, self.values):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def rk4(rhs: Callable[[np.ndarray], np.ndarray], x0, dt: float, n_steps: int) -> np.ndarray:
    """Classical fixed-step RK4; returns ``n_steps + 1`` rows including ``x0``.

    Raises:
        DivergenceError: if the state becomes non-finite.
    """
    x = np.array(x0, dtype=float).reshape(-1)
    out = np.empty((n_steps + 1, x.size))
    out[0] = x
    half = 0.5 * dt
    sixth = dt / 6.0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            k1 = rhs(x)
            k2 = rhs(x + half * k1)
            k3 = rhs(x + half * k2)
            k4 = rhs(x + dt * k3)
            x = x + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            out[k + 1] = x
    finite = np.isfinite(out).all(axis=1)
    if not finite.all():
        step = int(np.argmin(finite))
        raise DivergenceError(f"non-finite state at step {step}", step=step)
    return out


def integrate(system: ChaoticSystem, initial_state, dt: float, t_end: float) -> TimeSeries:
    """Integrate ``system`` from t=0 to ``t_end`` with one sample per RK4 step."""
    if not dt > 0 or not t_end > 0:
        raise ConfigurationError("dt and t_end must be positive")
    x0 = np.asarray(initial_state, dtype=float)
    if x0.shape != (system.dimension,):
        raise ConfigurationError(
            f"initial state has shape {x0.shape}, expected ({system.dimension},)"
        )
    n_steps = int(round(t_end / dt))
    values = rk4(_rhs_function(system), x0, dt, n_steps)
    return TimeSeries(0.0, dt, values)


def autocorrelation_timescale(signal: Union[TimeSeries, np.ndarray], dt: Optional[float] = None) -> float:
    """First lag at which the autocorrelation falls to half its zero-lag value.

    Uses the mean-removed, biased estimator and interpolates linearly
    between the two lags bracketing the half crossing.

    Args:
        signal: scalar TimeSeries, or a 1-D array together with ``dt``.
        dt: sample spacing, only for array input.

    Returns:
        The timescale in time units.
    """
    if isinstance(signal, TimeSeries):
        x = signal.scalar()
        dt = signal.dt
    else:
        x = np.asarray(signal, dtype=float).reshape(-1)
        if dt is None:
            raise ConfigurationError("dt is required for array input")
    n = x.size
    if n < 2:
        raise ConfigurationError("need at least 2 samples")
    x = x - x.mean()
    if not np.any(x):
        raise ConfigurationError("signal has zero variance")
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    spectrum = np.fft.rfft(x, nfft)
    acf = np.fft.irfft(spectrum * np.conj(spectrum), nfft)[:n]
    acf = acf / acf[0]
    below = np.flatnonzero(acf <= 0.5)
    if below.size == 0:
        raise TimescaleUndefinedError("autocorrelation never drops to one half")
    k = int(below[0])
    frac = (acf[k - 1] - 0.5) / (acf[k - 1] - acf[k])
    return float(dt * (k - 1 + frac))


@dataclass(frozen=True)
class TaskDefinition:
    """A reconstruction task: predict one component from another.

    Component indices are 0-based. ``tau_bar`` sets the random-shift range.
    """

    name: str
    system: ChaoticSystem
    input_component: int
    target_component: int
    t1: float
    t2: float
    t3: float
    tau_bar: float

    def __post_init__(self):
        if not 0 < self.t1 < self.t2 < self.t3:
            raise ConfigurationError(f"need 0 < t1 < t2 < t3, got {self.t1}, {self.t2}, {self.t3}")
        d = self.system.dimension
        for c in (self.input_component, self.target_component):
            if not 0 <= c < d:
                raise ConfigurationError(f"component {c} out of range for dimension {d}")
        if not self.tau_bar > 0:
            raise ConfigurationError("tau_bar must be positive")


def task_signals(task: TaskDefinition, dt: float, t_end: float, rng: np.random.Generator):
    """Integrate the task's system from a uniform [-1, 1] initial state.

    Returns:
        ``(s, g)`` scalar TimeSeries starting at t=0.
    """
    x0 = rng.uniform(-1.0, 1.0, task.system.dimension)
    traj = integrate(task.system, x0, dt, t_end)
    return traj.component(task.input_component), traj.component(task.target_component)


# The printed Hindmarsh-Rose drive (1) relaxes to a stable rest state well before
# t1, leaving a constant target; the task uses the standard chaotic-bursting drive.
HR_TASK_CURRENT = 3.25

TASKS = {
    "lorenz96": TaskDefinition("lorenz96", lorenz96(), 0, 3, 1000.0, 1100.0, 1200.0, 0.19),
    "lorenz": TaskDefinition("lorenz", lorenz(), 0, 1, 600.0, 610.0, 615.0, 0.3),
    "hr": TaskDefinition("hr", hindmarsh_rose(HR_TASK_CURRENT), 0, 1, 1000.0, 1010.0, 1015.0, 0.46),
}


def get_task(name: str) -> TaskDefinition:
    try:
        return TASKS[name]
    except KeyError:
        raise ConfigurationError(f"unknown task {name!r}; choose from {sorted(TASKS)}") from None
