"""
Fields, norms and the heat semigroup on the torus
=================================================

A field is a vector of centred Fourier coefficients. Norms are computed on
an oversampled grid; the semigroup of a diagonal operator is a pointwise
exponential of the symbol.
"""

import math

import numpy as np

from torus_spde import (DiagonalOperator, SpectralField, apply_fractional_power, apply_semigroup, derivative,
                        lp_norm, smoothing_bound_check, sobolev_norm)

# a band-limited field on T^1 with cutoff K = 8
u = SpectralField.from_function(lambda x: np.sin(2 * np.pi * x) + 0.25 * np.cos(6 * np.pi * x), 1, 8)
print("||u||_L2 =", lp_norm(u, 2.0), " (exact", math.sqrt(0.5 + 0.25**2 / 2), ")")
print("||u||_L4 =", lp_norm(u, 4.0))
print("||u||_W^{2,2} =", sobolev_norm(u, 2, 2.0))

# spectral differentiation: d/dx sin(2 pi x) = 2 pi cos(2 pi x)
du = derivative(u, (1,))
print("max |u' - exact| on a grid:",
      np.max(np.abs(du.grid_values(64) - (2 * np.pi * np.cos(2 * np.pi * np.arange(64) / 64)
                                          - 0.25 * 6 * np.pi * np.sin(6 * np.pi * np.arange(64) / 64)))))

# the semigroup of -A = -d^2/dx^2 + 1 damps mode k by exp(-t ((2 pi k)^2 + 1))
op = DiagonalOperator()
for t in (0.0, 0.01, 0.1):
    print(f"t = {t:5.2f}  ||S(t)u||_W^(2,2) = {sobolev_norm(apply_semigroup(op, t, u), 2, 2.0):.6f}")

# fractional powers commute with the semigroup
a = apply_fractional_power(op, 0.5, apply_semigroup(op, 0.05, u))
b = apply_semigroup(op, 0.05, apply_fractional_power(op, 0.5, u))
print("commutator size:", np.max(np.abs(a.coeffs - b.coeffs)))

# smoothing: sup_k lambda_k^delta exp(-t lambda_k) <= (delta/e)^delta t^-delta
for delta in (0.25, 0.5, 0.75):
    r = smoothing_bound_check(op, delta, 1e-2)
    print(f"delta = {delta}: measured {r.measured:.5f}  bound {r.bound:.5f}")
