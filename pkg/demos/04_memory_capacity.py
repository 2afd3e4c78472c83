"""
Memory capacity of a reservoir
==============================

MC_tau is the squared correlation between the delayed input x(t - tau) and
its best linear reconstruction from the current readouts; the capacity is
the sum over lags.

With i.i.d. input the capacity cannot exceed the number of nodes. A smooth
input such as a Lorenz coordinate is predictable from its own recent past,
so the same reservoir appears to remember far more.
"""

import numpy as np

from shiftres import ReservoirConfig, TimeSeries, drive, integrate, lorenz, memory_capacity

N, dt = 50, 0.01
config = ReservoirConfig.create(N=N, epsilon=0.8, gamma=20.0, seed=0)

rng = np.random.default_rng(1)
noise = TimeSeries(0.0, dt, rng.uniform(-1, 1, 8001))
mc_noise = memory_capacity(drive(config, noise, 0.0, 80.0), noise, (10.0, 70.0), tau_max_steps=300)

x = integrate(lorenz(), rng.uniform(-1, 1, 3), dt, 80.0).component(0)
x = TimeSeries(0.0, dt, x.scalar() / np.abs(x.scalar()).max())
mc_lorenz = memory_capacity(drive(config, x, 0.0, 80.0), x, (10.0, 70.0), tau_max_steps=300)

print(f"N = {N} nodes, 300 lags")
print(f"white noise input : MC = {mc_noise.total:6.1f}  (bound N = {N})")
print(f"Lorenz x input    : MC = {mc_lorenz.total:6.1f}")
for lag in (1, 10, 50, 150, 300):
    print(f"  lag {lag:3d}: noise {mc_noise.curve[lag - 1]:.3f}   lorenz {mc_lorenz.curve[lag - 1]:.3f}")
