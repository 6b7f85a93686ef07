"""
Exact free dynamics and renormalized powers
===========================================

The linear (free) part of the equation is an independent
Ornstein-Uhlenbeck process per mode, sampled exactly in law with
counter-keyed noise so every trajectory is reproducible and restartable.
Its Wick powers -- Hermite polynomials in the field with the divergent
variance subtracted -- are the driving "diagrams" of the nonlinear solver.
"""

import numpy as np

from sqe.noise import (OUTransition, Trajectory, analytic_wick_covariance,
                       covariance_of_observable, noise_draws, renorm_constant,
                       stationary_rep_coeffs, wick_trajectory)
from sqe.spectral import ModeSet, SpectralField

ms = ModeSet(4)
R = renorm_constant(ms)
print("renormalization constant at cutoff 4: R = %.6f" % R)
print("  (it grows like log(cutoff); at cutoff 64: %.6f)"
      % renorm_constant(ModeSet(64)))

# Sample a stationary path: the marginal variance of mode m is 1/(2 I_m),
# and one transition step is exact in law for any dt.
dt, steps, replicas = 0.05, 6, 8000
tr = OUTransition(ms, dt)
rep = stationary_rep_coeffs(ms, noise_draws(0, 0, replicas, ms.n_rep))
coeffs = [ms.expand_rep(rep)]
for i in range(steps):
    rep, _ = tr.apply(rep, noise_draws(0, i + 1, replicas, ms.n_rep))
    coeffs.append(ms.expand_rep(rep))
path = Trajectory(np.arange(steps + 1) * dt,
                  SpectralField(ms, np.stack(coeffs)))

# Verify stationarity empirically on the zero mode: variance 1/2.
var0 = (np.abs(path.fields.coeffs[..., ms.zero_index]) ** 2).mean()
print("zero-mode variance: %.4f (exact 0.5)" % var0)

# Wick powers <k> = H_k(<1>, R) for k = 1..3, along the whole path.
diagrams = wick_trajectory(path, ms, 3)
for k, trj in enumerate(diagrams.trajectories, start=1):
    mag = np.abs(trj.fields.coeffs[-1]).mean()
    print("order %d diagram, mean |coeff| at the endpoint: %.4f" % (k, mag))

# Their covariances have a closed form (k! times a k-fold convolution of
# the free propagator); compare against the sample for the cubic power.
phi = SpectralField(ModeSet(2), ModeSet(2).basis_coeffs((0, 0)))
spec = analytic_wick_covariance(3, 0.0, dt * steps, ms)
ana = covariance_of_observable(spec, phi)
c3 = diagrams.trajectories[2].fields.coeffs
y0 = c3[0][..., diagrams.trajectories[2].fields.mode_set.zero_index].real
y1 = c3[-1][..., diagrams.trajectories[2].fields.mode_set.zero_index].real
emp = (y0 * y1).mean()
se = (y0 * y1).std(ddof=1) / np.sqrt(replicas)
print("cubic-power covariance: empirical %.4f +- %.4f, analytic %.4f"
      % (emp, se, ana))
