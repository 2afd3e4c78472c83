"""Per-node readout time-shifts: random draws and first-order optimized shifts.

A shift ``tau_i`` replaces readout ``r_i(t)`` by ``r_i(t - tau_i)``. Optimized
shifts come from a joint ridge fit over the readouts and their derivatives,
using ``r_i(t - tau_i) ~ r_i(t) - tau_i * dr_i/dt`` so that the derivative
weight of node ``i`` equals ``-kappa_i * tau_i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import TaskDefinition, TimeSeries
from .errors import ConfigurationError
from .readout import (
    DEFAULT_ETA,
    ErrorReport,
    ReadoutModel,
    build_matrix,
    nrmse,
    ridge_fit,
    ridge_solve,
)
from .reservoir import ReservoirTrajectory

__all__ = [
    "ShiftVector",
    "sample_random_shifts",
    "optimize_shifts",
    "evaluate",
    "evaluate_optimized",
    "window_values",
    "DEGENERATE_KAPPA_RTOL",
]

# Nodes whose joint-fit weight is below this fraction of the largest weight get no shift.
DEGENERATE_KAPPA_RTOL = 1e-12

MODES = ("none", "random", "optimized")


@dataclass(eq=False)
class ShiftVector:
    """Per-node shifts in time units and how they were obtained."""

    taus: np.ndarray
    mode: str = "none"
    alpha: Optional[float] = None
    clamp_count: int = 0
    degenerate_count: int = 0

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=float).reshape(-1)
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown shift mode {self.mode!r}")
        if not np.all(np.isfinite(self.taus)):
            raise ConfigurationError("shifts must be finite")
        if self.mode == "none" and np.any(self.taus != 0):
            raise ConfigurationError("mode 'none' requires all-zero shifts")

    @classmethod
    def zeros(cls, N: int) -> "ShiftVector":
        return cls(np.zeros(N), "none")

    def __len__(self):
        return self.taus.size

    def to_dict(self) -> dict:
        return {
            "taus": self.taus.tolist(),
            "mode": self.mode,
            "alpha": self.alpha,
            "clamp_count": self.clamp_count,
            "degenerate_count": self.degenerate_count,
        }

    @classmethod
    def from_dict(cls, d) -> "ShiftVector":
        return cls(np.asarray(d["taus"], dtype=float), d["mode"], d.get("alpha"),
                   d.get("clamp_count", 0), d.get("degenerate_count", 0))


def sample_random_shifts(N: int, alpha: float, tau_bar: float, seed) -> ShiftVector:
    """``N`` i.i.d. Uniform[0, alpha * tau_bar] shifts.

    Draws for different ``alpha`` under one seed are the same unit draws
    rescaled, so ensembles are comparable across an alpha grid.
    """
    if alpha < 0 or not tau_bar > 0:
        raise ConfigurationError("need alpha >= 0 and tau_bar > 0")
    rng = np.random.default_rng(seed)
    taus = rng.uniform(0.0, alpha * tau_bar, N)
    return ShiftVector(taus, "random", alpha=alpha)


def _default_buffer(traj: ReservoirTrajectory, window) -> float:
    t_a, t_b = window
    before = t_a - traj.record_start
    after = traj.record_end - (t_b - traj.dt)
    return max(0.0, min(before, after))


def optimize_shifts(traj: ReservoirTrajectory, window, g, eta: float = DEFAULT_ETA,
                    buffer: Optional[float] = None) -> tuple[ReadoutModel, ShiftVector]:
    """First-order optimized shifts from a joint state/derivative ridge fit.

    Solves for ``[kappa; lambda; bias]`` on ``[Omega_r, Omega_rdot, 1]``, takes
    ``tau_i = -lambda_i / kappa_i`` and refits ``kappa`` on the matrix shifted by
    those ``tau``. Shifts beyond ``buffer`` are clamped to ``+-buffer``.

    Args:
        traj: trajectory with derivative records.
        window: training window ``(t_a, t_b)``.
        g: target samples on the window (length T).
        eta: ridge parameter for both solves.
        buffer: largest admissible ``|tau|``; defaults to the recording margin
            around ``window``.

    Returns:
        ``(model, shifts)`` where ``model.kappa`` is the refit, and
        ``model.kappa_joint`` / ``model.lam`` come from the joint solve.
    """
    if buffer is None:
        buffer = _default_buffer(traj, window)
    g = np.asarray(g, dtype=float).reshape(-1)
    omega_opt = build_matrix(traj, window, include_derivatives=True)
    if g.size != omega_opt.T:
        raise ConfigurationError(f"target has {g.size} rows, window has {omega_opt.T}")
    N = omega_opt.n_nodes
    coef = ridge_solve(omega_opt.values, g, eta)
    kappa, lam, bias = coef[:N], coef[N:2 * N], coef[2 * N]

    degenerate = np.abs(kappa) < DEGENERATE_KAPPA_RTOL * np.abs(kappa).max()
    taus = np.zeros(N)
    ok = ~degenerate
    taus[ok] = -lam[ok] / kappa[ok]
    clamped = np.abs(taus) > buffer
    taus = np.clip(taus, -buffer, buffer)

    shifts = ShiftVector(taus, "optimized", clamp_count=int(clamped.sum()),
                         degenerate_count=int(degenerate.sum()))
    refit = ridge_fit(build_matrix(traj, window, shifts), g, eta, shifts=taus)
    refit.lam = lam
    refit.kappa_joint = np.append(kappa, bias)
    return refit, shifts


def window_values(series: TimeSeries, window, dt: Optional[float] = None) -> np.ndarray:
    """Samples of a scalar series on the half-open window ``[t_a, t_b)``."""
    dt = series.dt if dt is None else dt
    a = series.index_of(window[0])
    T = int(np.floor((window[1] - window[0]) / dt + 0.5))
    if a < 0 or a + T > series.n_samples:
        raise ConfigurationError(f"series does not cover window {window}")
    return series.scalar()[a:a + T]


def evaluate(traj: ReservoirTrajectory, task: TaskDefinition, target: TimeSeries,
             shifts: Optional[ShiftVector] = None, eta: float = DEFAULT_ETA,
             kappa_joint: Optional[np.ndarray] = None, **provenance) -> ErrorReport:
    """Training and testing error with the same shifts in both phases.

    The readout is fitted on ``[t1, t2)`` and reused unchanged on ``[t2, t3)``.
    When ``kappa_joint`` is given, the errors of that coefficient vector on the
    same shifted matrices are reported as well.
    """
    if shifts is None:
        shifts = ShiftVector.zeros(traj.states.shape[1])
    train, test = (task.t1, task.t2), (task.t2, task.t3)
    g_tr = window_values(target, train)
    g_ts = window_values(target, test)
    omega_tr = build_matrix(traj, train, shifts)
    omega_ts = build_matrix(traj, test, shifts)
    model = ridge_fit(omega_tr, g_tr, eta, shifts=shifts.taus)
    report = ErrorReport(
        delta_tr=nrmse(model.predict(omega_tr), g_tr),
        delta_ts=nrmse(model.predict(omega_ts), g_ts),
        shift_mode=shifts.mode,
        alpha=shifts.alpha,
        **provenance,
    )
    if shifts.mode == "optimized":
        report.clamp_count = shifts.clamp_count
        report.degenerate_count = shifts.degenerate_count
    if kappa_joint is not None:
        report.delta_tr_joint = nrmse(omega_tr.values @ kappa_joint, g_tr)
        report.delta_ts_joint = nrmse(omega_ts.values @ kappa_joint, g_ts)
    return report


def evaluate_optimized(traj: ReservoirTrajectory, task: TaskDefinition, target: TimeSeries,
                       eta: float = DEFAULT_ETA, buffer: Optional[float] = None,
                       **provenance) -> tuple[ErrorReport, ShiftVector]:
    """Optimize shifts on the training window, then :func:`evaluate` them.

    ``buffer`` is capped by the recorded margin around both phases.
    """
    train = (task.t1, task.t2)
    margin = min(_default_buffer(traj, train), _default_buffer(traj, (task.t2, task.t3)))
    buffer = margin if buffer is None else min(buffer, margin)
    model, shifts = optimize_shifts(traj, train, window_values(target, train), eta, buffer)
    report = evaluate(traj, task, target, shifts, eta, kappa_joint=model.kappa_joint, **provenance)
    return report, shifts
