"""
Dyadic decomposition and distributional norms
=============================================

Rough fields are measured in negative-regularity Holder/Besov norms built
from a smooth dyadic partition of frequency space.  This demo shows the
partition of unity, block norms, the paraproduct splitting of a product,
and a sample from the norm-inequality suite used for regression testing.
"""

import numpy as np

from sqe.besov import (BesovIndex, bony_decompose, holder_norm,
                       inequality_suite, lp_block, partition_for,
                       random_spectral_coeffs)
from sqe.spectral import ModeSet, SpectralField, dealiased_product

ms = ModeSet(16)
part = partition_for(16)
w = part.weights(ms)
print("partition of unity defect: %.2e" % np.abs(w.sum(axis=0) - 1).max())

# A free-field-like sample: coefficients decaying like |m|^{-1}, which is
# just too rough to be a function -- its positive-regularity norms blow up
# with the cutoff while C^{-alpha} norms stay bounded.
rng = np.random.default_rng(1)
f = SpectralField(ms, random_spectral_coeffs(ms, rng, decay=1.0))
for alpha in (0.1, 0.3, 0.5):
    print("  ||f||_{C^-%.1f} = %.3f" % (alpha, holder_norm(f, alpha)))

# Each dyadic block isolates an annulus of frequencies.
for k in part.levels[:4]:
    b = lp_block(f, k, part)
    print("block %2d energy %.4f" % (k, (np.abs(b.coeffs) ** 2).sum()))

# The paraproduct decomposition splits fg into two paraproducts and the
# resonant part; summed, they reproduce the dealiased product exactly.
g = SpectralField(ms, random_spectral_coeffs(ms, rng, decay=1.5))
para, res, anti = bony_decompose(f, g)
full = dealiased_product([f, g])
defect = np.abs((para + res + anti).coeffs - full.coeffs).max()
print("paraproduct reconstruction defect: %.2e" % defect)

# The inequality suite fits the best empirical constant for each bound
# (multiplicative, interpolation, smoothing, ...) over random samples.
rep, rows = inequality_suite(60, rng_seed=0, cutoff=8.0)
print("\nfitted constants over 60 samples:")
for name, const, samples, verdict in rows[:6]:
    print("  %-38s %8.3f  [%s]" % (name, const, verdict))
