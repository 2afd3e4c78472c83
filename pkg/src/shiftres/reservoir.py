"""Continuous-time tanh reservoir driven by a scalar input.

The node states obey ``dr/dt = gamma * (-r + tanh(epsilon * A @ r + s(t) * w))``
with a symmetric, negative-definite adjacency ``A``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import TimeSeries
from .errors import ConfigurationError, DivergenceError

__all__ = [
    "build_adjacency",
    "ReservoirConfig",
    "ReservoirTrajectory",
    "drive",
    "shift_buffer",
    "RK4_STABILITY_TARGET",
]

# Largest dt * (stiffness bound) taken in one RK4 sub-step; the real-axis
# stability limit of classical RK4 is about 2.785.
RK4_STABILITY_TARGET = 2.0


def build_adjacency(N: int, seed) -> tuple[np.ndarray, float]:
    """Random symmetric adjacency with a Gershgorin-safe negative diagonal.

    Off-diagonal entries are Uniform[0, 1] (upper triangle mirrored). The
    diagonal is ``beta = -(max off-diagonal row sum) - 0.1``, which puts every
    eigenvalue below zero.

    Args:
        N: node count, at least 2.
        seed: anything accepted by ``numpy.random.default_rng``.

    Returns:
        ``(A, beta)``.
    """
    if N < 2:
        raise ConfigurationError(f"need N >= 2, got {N}")
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.uniform(0.0, 1.0, size=(N, N)), k=1)
    A = upper + upper.T
    beta = -float(A.sum(axis=1).max()) - 0.1
    np.fill_diagonal(A, beta)
    lam_max = float(np.linalg.eigvalsh(A)[-1])
    if not lam_max < 0:
        raise ConfigurationError(f"adjacency has non-negative eigenvalue {lam_max}")
    return A, beta


@dataclass(frozen=True, eq=False)
class ReservoirConfig:
    """Fixed parameters of one reservoir.

    Use :meth:`create` to draw ``A`` from a seed; the constructor accepts an
    explicit matrix.
    """

    A: np.ndarray
    beta: float
    epsilon: float
    gamma: float
    dt: float = 0.01
    w: Optional[np.ndarray] = None
    seed: Optional[int] = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigurationError("A must be square")
        if not np.array_equal(A, A.T):
            raise ConfigurationError("A must be exactly symmetric")
        if not self.beta < 0:
            raise ConfigurationError("beta must be negative")
        if self.epsilon < 0:
            raise ConfigurationError("epsilon must be >= 0")
        if not self.gamma > 0:
            raise ConfigurationError("gamma must be > 0")
        if not self.dt > 0:
            raise ConfigurationError("dt must be > 0")
        w = np.ones(A.shape[0]) if self.w is None else np.asarray(self.w, dtype=float)
        if w.shape != (A.shape[0],):
            raise ConfigurationError("w must have one entry per node")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "w", w)

    @classmethod
    def create(cls, N: int = 100, epsilon: float = 1.0, gamma: float = 1.0,
               dt: float = 0.01, seed: int = 0) -> "ReservoirConfig":
        A, beta = build_adjacency(N, seed)
        return cls(A=A, beta=beta, epsilon=epsilon, gamma=gamma, dt=dt, seed=seed)

    @property
    def N(self) -> int:
        return self.A.shape[0]

    def with_params(self, *, epsilon: Optional[float] = None,
                    gamma: Optional[float] = None) -> "ReservoirConfig":
        """Same network, different ``epsilon`` / ``gamma``."""
        return ReservoirConfig(
            A=self.A, beta=self.beta,
            epsilon=self.epsilon if epsilon is None else epsilon,
            gamma=self.gamma if gamma is None else gamma,
            dt=self.dt, w=self.w, seed=self.seed,
        )

    def substeps(self) -> int:
        """RK4 sub-steps per sample so the stiff node dynamics stay stable."""
        norm = float(np.abs(np.linalg.eigvalsh(self.A)).max())
        stiffness = self.gamma * (1.0 + self.epsilon * norm)
        return max(1, math.ceil(self.dt * stiffness / RK4_STABILITY_TARGET))

    def rhs(self, r: np.ndarray, s: float) -> np.ndarray:
        return self.gamma * (np.tanh((self.epsilon * self.A) @ r + s * self.w) - r)


def shift_buffer(alpha: float, tau_bar: float, dt: float) -> float:
    """Recording margin ``ceil(5 * alpha * tau_bar / dt) * dt``."""
    return math.ceil(5.0 * alpha * tau_bar / dt - 1e-9) * dt


@dataclass(frozen=True, eq=False)
class ReservoirTrajectory:
    """Recorded node states and their exact time derivatives.

    Row ``k`` of ``states`` / ``derivatives`` belongs to ``record_start + k * dt``.
    """

    config: ReservoirConfig
    record_start: float
    dt: float
    states: np.ndarray
    derivatives: np.ndarray
    start_index: int = 0

    @property
    def n_samples(self) -> int:
        return self.states.shape[0]

    @property
    def record_end(self) -> float:
        return self.record_start + (self.n_samples - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.record_start + np.arange(self.n_samples) * self.dt

    def index_of(self, t: float) -> int:
        return int(np.floor((t - self.record_start) / self.dt + 0.5))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + [f"r_{i + 1}" for i in range(self.states.shape[1])])
            for t, row in zip(self.times, self.states):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])

    def save_npz(self, path) -> None:
        np.savez(path, t=self.times, states=self.states, derivatives=self.derivatives)


def drive(config: ReservoirConfig, input: TimeSeries, record_start: float,
          record_end: float) -> ReservoirTrajectory:
    """Integrate the reservoir from ``r(0) = 0`` and record a window.

    The input is interpolated linearly inside each step, so the RK4 midpoint
    stages see the average of adjacent samples. Stiff configurations are
    integrated with several equal sub-steps per sample.

    Args:
        config: reservoir parameters; ``config.dt`` must equal ``input.dt``.
        input: scalar signal whose first sample is at t=0.
        record_start: first recorded time (>= 0).
        record_end: last recorded time.

    Raises:
        DivergenceError: on a non-finite state.
    """
    dt = config.dt
    if abs(input.dt - dt) > 1e-12 * dt:
        raise ConfigurationError(f"input dt {input.dt} differs from reservoir dt {dt}")
    if abs(input.t_start) > 1e-12:
        raise ConfigurationError("input must start at t=0")
    if record_start < 0 or record_end < record_start:
        raise ConfigurationError("need 0 <= record_start <= record_end")
    s = input.scalar()
    n_end = input.index_of(record_end)
    n_start = input.index_of(record_start)
    if n_end > input.n_samples - 1:
        raise ConfigurationError(
            f"input ends at t={input.t_end}, recording needs t={record_end}"
        )

    N = config.N
    M = config.epsilon * config.A
    w = config.w
    gamma = config.gamma
    m = config.substeps()
    h = dt / m
    half = 0.5 * h
    sixth = h / 6.0

    def f(r, u):
        return gamma * (np.tanh(M @ r + u * w) - r)

    n_rec = n_end - n_start + 1
    states = np.empty((n_rec, N))
    derivs = np.empty((n_rec, N))
    r = np.zeros(N)
    for k in range(n_end + 1):
        sk = s[k]
        k1 = f(r, sk)
        if k >= n_start:
            states[k - n_start] = r
            derivs[k - n_start] = k1
        if k == n_end:
            break
        ds = s[k + 1] - sk
        for j in range(m):
            if j:
                k1 = f(r, sk + ds * (j / m))
            u_mid = sk + ds * ((j + 0.5) / m)
            k2 = f(r + half * k1, u_mid)
            k3 = f(r + half * k2, u_mid)
            k4 = f(r + h * k3, sk + ds * ((j + 1) / m))
            r = r + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not math.isfinite(r.sum()):
            raise DivergenceError(
                f"reservoir diverged at step {k + 1} (gamma={gamma}, epsilon={config.epsilon})",
                step=k + 1,
            )
    return ReservoirTrajectory(
        config=config,
        record_start=n_start * dt,
        dt=dt,
        states=states,
        derivatives=derivs,
        start_index=n_start,
    )
