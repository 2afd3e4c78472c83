"""Readout matrices, ridge regression, normalized errors and memory capacity."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .dynamics import TimeSeries
from .errors import BufferExceededError, ConfigurationError, NumericalError, UndefinedErrorMetric
from .reservoir import ReservoirTrajectory

__all__ = [
    "DEFAULT_ETA",
    "ReadoutMatrix",
    "ReadoutModel",
    "ErrorReport",
    "MemoryCapacity",
    "shift_steps",
    "build_matrix",
    "ridge_solve",
    "ridge_fit",
    "nrmse",
    "memory_capacity",
]

DEFAULT_ETA = 1e-6


def shift_steps(taus, dt: float) -> np.ndarray:
    """Round shifts (time units) to whole samples, ties rounding up."""
    taus = np.asarray(taus, dtype=float)
    return np.floor(taus / dt + 0.5).astype(np.int64)


@dataclass(frozen=True, eq=False)
class ReadoutMatrix:
    """Design matrix over one window.

    Columns are the (shifted) node states, then the unshifted node derivatives
    when requested, then a bias column of ones.
    """

    values: np.ndarray
    window: tuple
    steps: np.ndarray
    n_nodes: int
    include_derivatives: bool = False

    @property
    def T(self) -> int:
        return self.values.shape[0]


def _window_rows(traj: ReservoirTrajectory, window) -> tuple[int, int]:
    t_a, t_b = window
    if not t_b > t_a:
        raise ConfigurationError(f"empty window {window}")
    a = traj.index_of(t_a)
    T = int(np.floor((t_b - t_a) / traj.dt + 0.5))
    return a, T


def build_matrix(traj: ReservoirTrajectory, window, shifts=None,
                 include_derivatives: bool = False) -> ReadoutMatrix:
    """Assemble the readout matrix for the half-open window ``[t_a, t_b)``.

    Row ``k``, column ``i`` holds ``r_i(t_a + k*dt - tau_i)`` with ``tau_i``
    rounded to a whole number of samples.

    Args:
        traj: recorded trajectory; its buffer must cover every shifted row.
        window: ``(t_a, t_b)`` in time units.
        shifts: per-node shifts in time units, a ShiftVector, or None for zero.
        include_derivatives: append the unshifted ``dr_i/dt`` columns.

    Raises:
        BufferExceededError: a shifted column reaches outside the recording.
    """
    states = traj.states
    n_rec, N = states.shape
    if shifts is None:
        taus = np.zeros(N)
    else:
        taus = np.asarray(getattr(shifts, "taus", shifts), dtype=float)
    if taus.shape != (N,):
        raise ConfigurationError(f"expected {N} shifts, got shape {taus.shape}")
    steps = shift_steps(taus, traj.dt)
    a, T = _window_rows(traj, window)
    if T <= N:
        raise ConfigurationError(f"window has T={T} rows, need more than N={N}")
    if a < 0 or a + T > n_rec:
        raise BufferExceededError(f"window {window} lies outside the recording")

    lo = a - steps
    bad = np.flatnonzero((lo < 0) | (lo + T > n_rec))
    if bad.size:
        i = int(bad[0])
        raise BufferExceededError(
            f"node {i}: shift {taus[i]:.6g} exceeds the recorded buffer", node=i, shift=float(taus[i])
        )

    n_cols = 2 * N + 1 if include_derivatives else N + 1
    values = np.empty((T, n_cols), order="F")
    for i in range(N):
        values[:, i] = states[lo[i]:lo[i] + T, i]
    if include_derivatives:
        values[:, N:2 * N] = traj.derivatives[a:a + T]
    values[:, -1] = 1.0
    return ReadoutMatrix(values=np.ascontiguousarray(values), window=tuple(window), steps=steps,
                         n_nodes=N, include_derivatives=include_derivatives)


def ridge_solve(omega: np.ndarray, G: np.ndarray, eta: float) -> np.ndarray:
    """Solve ``(omega.T @ omega + eta*I) K = omega.T @ G`` by Cholesky.

    Reservoir states are strongly collinear, so the Gram matrix is badly
    conditioned at small ``eta``. One step of iterative refinement, with the
    residual formed from ``omega`` itself, recovers the digits the normal
    equations lose.

    ``G`` may be a vector or a (T x k) block of targets.
    """
    if not eta > 0:
        raise ConfigurationError(f"eta must be positive, got {eta}")
    gram = omega.T @ omega
    gram[np.diag_indices_from(gram)] += eta
    try:
        factor = scipy.linalg.cho_factor(gram, lower=False, check_finite=True)
        K = scipy.linalg.cho_solve(factor, omega.T @ G, check_finite=False)
        resid = omega.T @ (G - omega @ K) - eta * K
        K = K + scipy.linalg.cho_solve(factor, resid, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"ridge solve failed: {exc}") from exc
    if not np.all(np.isfinite(K)):
        raise NumericalError("ridge solve returned non-finite coefficients")
    return K


@dataclass(eq=False)
class ReadoutModel:
    """Fitted linear readout ``h = Omega @ kappa`` (bias coefficient last).

    For optimized shifts ``lam`` holds the derivative weights of the joint fit
    and ``kappa_joint`` its state and bias weights; ``kappa`` is then the refit
    on the shifted matrix.
    """

    kappa: np.ndarray
    eta: float
    shifts: np.ndarray
    lam: Optional[np.ndarray] = None
    kappa_joint: Optional[np.ndarray] = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.kappa)):
            raise NumericalError("non-finite readout coefficients")
        if not self.eta > 0:
            raise ConfigurationError("eta must be positive")

    def predict(self, omega) -> np.ndarray:
        return getattr(omega, "values", omega) @ self.kappa

    def to_dict(self) -> dict:
        out = {"kappa": self.kappa.tolist(), "eta": self.eta, "shifts": np.asarray(self.shifts).tolist()}
        if self.lam is not None:
            out["lambda"] = self.lam.tolist()
        if self.kappa_joint is not None:
            out["kappa_joint"] = self.kappa_joint.tolist()
            out["kappa_refit"] = self.kappa.tolist()
        return out


def ridge_fit(omega, g, eta: float = DEFAULT_ETA, shifts=None) -> ReadoutModel:
    """Ridge-regression readout minimizing ``|omega k - g|^2 + eta |k|^2``."""
    values = getattr(omega, "values", omega)
    g = np.asarray(g, dtype=float).reshape(-1)
    if g.shape[0] != values.shape[0]:
        raise ConfigurationError(f"target has {g.shape[0]} rows, matrix has {values.shape[0]}")
    kappa = ridge_solve(values, g, eta)
    if shifts is None:
        n = getattr(omega, "n_nodes", values.shape[1] - 1)
        shifts = np.zeros(n)
    return ReadoutModel(kappa=kappa, eta=eta, shifts=np.asarray(shifts, dtype=float))


def nrmse(h, g) -> float:
    """Standard deviation of ``h - g`` over the standard deviation of ``g``."""
    h = np.asarray(h, dtype=float).reshape(-1)
    g = np.asarray(g, dtype=float).reshape(-1)
    if h.shape != g.shape or h.size < 2:
        raise ConfigurationError("h and g must have equal length >= 2")
    sg = np.std(g)
    if sg == 0:
        raise UndefinedErrorMetric("target has zero variance")
    return float(np.std(h - g) / sg)


@dataclass
class ErrorReport:
    """Training and testing error of one run plus its provenance."""

    delta_tr: float
    delta_ts: float
    shift_mode: str = "none"
    seed: Optional[int] = None
    gamma: Optional[float] = None
    epsilon: Optional[float] = None
    alpha: Optional[float] = None
    delta_tr_joint: Optional[float] = None
    delta_ts_joint: Optional[float] = None
    clamp_count: Optional[int] = None
    degenerate_count: Optional[int] = None

    def __post_init__(self):
        for v in (self.delta_tr, self.delta_ts):
            if not (np.isfinite(v) and v >= 0):
                raise NumericalError(f"invalid error value {v}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "ErrorReport":
        return cls(**d)


@dataclass
class MemoryCapacity:
    """Total memory capacity and the per-lag squared correlations."""

    total: float
    curve: np.ndarray
    lags: np.ndarray
    tail_mass: float = field(default=0.0)


def memory_capacity(traj: ReservoirTrajectory, input: TimeSeries, window,
                    tau_max_steps: int = 300, eta: float = DEFAULT_ETA) -> MemoryCapacity:
    """Sum over lags of the squared correlation between the delayed input
    ``x(t - tau)`` and its ridge reconstruction from the unshifted readouts.

    Every lag shares the same readout matrix, so all lags are solved against
    one factorization. ``tail_mass`` is the capacity in the last tenth of the
    lags, a check that the truncation at ``tau_max_steps`` is harmless.
    """
    if tau_max_steps < 1:
        raise ConfigurationError("tau_max_steps must be >= 1")
    omega = build_matrix(traj, window)
    x = input.scalar()
    a = input.index_of(window[0])
    T = omega.T
    if a - tau_max_steps < 0 or a + T > input.n_samples:
        raise ConfigurationError("input does not cover the delayed window")
    lags = np.arange(1, tau_max_steps + 1)
    rows = a + np.arange(T)
    targets = x[rows[:, None] - lags[None, :]]
    K = ridge_solve(omega.values, targets, eta)
    H = omega.values @ K
    xc = targets - targets.mean(axis=0)
    hc = H - H.mean(axis=0)
    cov = (xc * hc).mean(axis=0)
    var_x = (xc * xc).mean(axis=0)
    var_h = (hc * hc).mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        curve = np.where((var_h > 0) & (var_x > 0), cov**2 / (var_x * var_h), 0.0)
    n_tail = max(1, tau_max_steps // 10)
    return MemoryCapacity(total=float(curve.sum()), curve=curve, lags=lags,
                          tail_mass=float(curve[-n_tail:].sum()))
