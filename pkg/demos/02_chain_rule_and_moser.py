"""
Chain rule and superposition estimates
======================================

``D^gamma G(f)`` expands into products of derivatives of ``f`` weighted by
combinatorial constants. The Moser ratio compares ``||G(f)||_{W^{m,p}}``
with ``1 + ||f||^m_{W^{1,mp}} + ||f||_{W^{m,p}}``; it stays bounded as the
amplitude of ``f`` grows.
"""

import numpy as np

from torus_spde import SpectralField, TanhScaled, chain_rule_eval, derivative, faa_di_bruno_terms, moser_check
from torus_spde.spectral import GridField, forward_transform

# the expansion of d^3 G(f): G''' f'^3 + 3 G'' f' f'' + G' f'''
for term in faa_di_bruno_terms((3,)):
    print(f"constant {term.constant}  G^({term.order})  parts {term.parts}")

# compare with spectral differentiation of the sampled composite
G = TanhScaled(1.0)
f = SpectralField.from_function(lambda x: np.sin(2 * np.pi * x), 1, 2)
K, n = 24, 512
chain = chain_rule_eval(G, f, (3,), cutoff=K, n=n)
spectral = derivative(forward_transform(GridField(G(f.grid_values(n))), K), (3,))
print("chain rule vs spectral:", np.max(np.abs(chain.coeffs - spectral.coeffs)))

# Moser ratio along growing amplitude
for s in (1, 2, 4, 8, 16):
    r = moser_check(G, f * s, 2, 2.0)
    print(f"s = {s:2d}  lhs {r.lhs:9.3f}  rhs {r.rhs:9.3f}  ratio {r.ratio:.4f}")
