"""Frozen randomized suites and reference configurations.

Every suite is a pure function of its seed, so regenerating it always gives
the same cases. Baseline constants in ``data/baselines.json`` refer to
these suites.
"""

from __future__ import annotations

import math

import numpy as np

from .config import ExperimentConfig, InitialCondition
from .elliptic import DiagonalOperator
from .functions import Affine, AtanScaled, PolynomialClamped, SeparableFunction, Sine, TanhScaled
from .model import DiffusionSpec, Model, NonlinearitySpec, Term
from .solver import SolverConfig
from .spectral import SpectralField, random_field

__all__ = [
    "MOSER_SCALES",
    "chain_rule_suite",
    "contraction_config",
    "gamma_suite",
    "linear_oracle_config",
    "moser_suite",
    "orthonormal_noise",
    "random_catalog_function",
    "scaling_config",
    "uniformity_config",
]

MOSER_SCALES = (1.0, 2.0, 4.0, 8.0)


def random_catalog_function(rng: np.random.Generator, order: int = 6):
    kind = rng.integers(5)
    if kind == 0:
        return TanhScaled(float(rng.uniform(0.5, 2.0)), order=max(order, 1))
    if kind == 1:
        return AtanScaled(float(rng.uniform(0.5, 2.0)), order=max(order, 1))
    if kind == 2:
        return Sine(float(rng.uniform(0.5, 1.5)), float(rng.uniform(0.5, 1.5)))
    if kind == 3:
        return Affine(float(rng.uniform(-2, 2)), float(rng.uniform(-1, 1)))
    coeffs = tuple(float(c) for c in rng.uniform(-1, 1, size=3))
    return PolynomialClamped(coeffs, radius=float(rng.uniform(1.5, 3.0)), width=2.0, order=max(order, 1))


def moser_suite(seed: int = 20240611, cases: int = 104) -> list[dict]:
    """``(G, f, m, p)`` cases; scalar and separable outer functions, ``N`` in {1, 2}."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(cases):
        N = 1 if i % 4 else 2
        m = int(rng.integers(2, 4)) if N == 1 else 2
        p = float(rng.choice([2.0, 3.0, 4.0]))
        K = int(rng.integers(1, 4)) if N == 1 else 2
        f = random_field(rng, N, K, decay=1.0)
        f = f / max(float(np.max(np.abs(f.grid_values(32)))), 1e-12)
        G = random_catalog_function(rng, order=m)
        if i % 8 == 3:
            g = random_field(rng, N, 1, decay=0.0) * 0.5 + 1.0
            G = SeparableFunction(g, G)
        out.append({"G": G, "f": f, "m": m, "p": p})
    return out


def chain_rule_suite(seed: int = 7, cases: int = 50) -> list[dict]:
    """``(G, f, gamma)`` with ``|gamma| <= 3`` and ``N <= 2``."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(cases):
        N = 1 + i % 2
        order = int(rng.integers(1, 4))
        parts = rng.multinomial(order, [1.0 / N] * N)
        gamma = tuple(int(x) for x in parts)
        K = int(rng.integers(1, 4))
        f = random_field(rng, N, K, decay=1.5)
        f = f / max(float(np.max(np.abs(f.grid_values(32)))), 1e-12)
        G = random_catalog_function(rng, order=max(order, 3))
        while isinstance(G, PolynomialClamped):  # keep the field inside the polynomial region
            G = random_catalog_function(rng, order=max(order, 3))
        out.append({"G": G, "f": f, "gamma": gamma})
    return out


def gamma_suite(seed: int = 11, cases: int = 20) -> list[dict]:
    """``(diffusion, u, p)`` cases for gamma-norm checks."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(cases):
        N = 1
        d = int(rng.integers(1, 4))
        fns = []
        for _ in range(d):
            g = random_field(rng, N, 2, decay=1.0) * 0.5 + 1.0
            fns.append(SeparableFunction(g, random_catalog_function(rng, order=1)))
        u = random_field(rng, N, 4, decay=1.0)
        p = float(rng.choice([2.0, 3.0, 4.0, 6.0]))
        out.append({"diffusion": DiffusionSpec(tuple(fns), N), "u": u, "p": p})
    return out


def orthonormal_noise(K: int) -> DiffusionSpec:
    """Additive noise along the real orthonormal basis ``1, sqrt2 cos, sqrt2 sin`` up to ``K``."""
    fns = [SeparableFunction(SpectralField.constant(1.0, 1, K), Affine(0.0, 1.0))]
    for k in range(1, K + 1):
        fns.append(SeparableFunction(SpectralField.from_modes({k: 1 / math.sqrt(2)}, 1, K), Affine(0.0, 1.0)))
        fns.append(SeparableFunction(SpectralField.from_modes({k: -1j / math.sqrt(2)}, 1, K), Affine(0.0, 1.0)))
    return DiffusionSpec(tuple(fns), 1)


def linear_oracle_config(T: float = 4.0, J: int = 2048) -> SolverConfig:
    """Modes ``k = 0..7``; ``lambda(k) = 0.05 k^2 + 1`` so that ``lambda(0) = 1``."""
    op = DiagonalOperator(l=1, shift=1.0, diffusivity=0.05 / (4 * math.pi**2))
    return SolverConfig(T=T, J=J, K=7, operator=op, model=Model(NonlinearitySpec(), orthonormal_noise(7)))


def _nonlinear_model(a_drift: float = 1.0, noise: float = 0.5) -> Model:
    drift = NonlinearitySpec((Term(a_drift, (1,), TanhScaled(1.0)), Term(-0.5, (0,), AtanScaled(1.0))))
    g = SpectralField.from_function(lambda x: 1.0 + 0.5 * np.cos(2 * np.pi * x), 1, 1)
    diff = DiffusionSpec((SeparableFunction(g, Affine(noise * 0.5, noise)),))
    return Model(drift, diff)


def contraction_config(T: float = 0.2) -> SolverConfig:
    """Small-horizon nonlinear suite with ``l = 1``."""
    return SolverConfig(T=T, J=256, K=16, p=2.0, q=4.0, m=1, n_max=8, tol=0.0,
                        operator=DiagonalOperator(), model=_nonlinear_model())


def uniformity_config(paths: int = 100) -> ExperimentConfig:
    sc = SolverConfig(T=1.0, J=1024, K=64, p=2.0, q=4.0, m=2, n_max=10, tol=1e-10,
                      operator=DiagonalOperator(), model=_nonlinear_model(a_drift=1.0, noise=1.0))
    ic = InitialCondition("random", target=0.5, decay=2.0, cutoff=8)
    return ExperimentConfig(sc, paths, 12345, ic)


def scaling_config(paths: int = 40) -> ExperimentConfig:
    sc = SolverConfig(T=0.5, J=128, K=16, p=2.0, q=4.0, m=2, n_max=6, tol=1e-10,
                      operator=DiagonalOperator(), model=_nonlinear_model(a_drift=0.5, noise=0.3))
    ic = InitialCondition("random", target=1.0, decay=2.0, cutoff=4)
    return ExperimentConfig(sc, paths, 2024, ic)
