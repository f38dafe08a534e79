"""Nonlinearity, diffusion and gamma-radonifying norms.

The drift is ``F(u) = sum_alpha a_alpha D^alpha f_alpha(u)`` and the noise
coefficient maps ``h in R^d`` to ``sum_i sigma_i(., u(.)) h_i``. Pointwise
compositions are evaluated on the oversampled grid and projected back onto
the retained modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, optimize

from .functions import ScalarFunction, SeparableFunction, function_from_dict
from .rng import standard_normals, stream_id
from .spectral import (
    SpectralField,
    _coeffs_to_grid,
    _derivative_symbol,
    _grid_to_coeffs,
    grid_points,
    oversampled_size,
    quadrature_size,
)

__all__ = [
    "Certificate",
    "DiffusionSpec",
    "GammaEstimate",
    "Model",
    "NonlinearitySpec",
    "Term",
    "eval_diffusion_increment",
    "eval_nonlinearity",
    "gamma_norm_closed",
    "gamma_norm_mc",
    "gaussian_moment_constant",
    "growth_and_lipschitz_certify",
]


@dataclass(frozen=True)
class Term:
    """One summand ``a D^alpha f(u)`` of the drift."""

    coefficient: float
    alpha: tuple
    function: ScalarFunction

    def __post_init__(self):
        alpha = (self.alpha,) if np.isscalar(self.alpha) else tuple(int(a) for a in self.alpha)
        if any(a < 0 for a in alpha):
            raise ValueError("multi-index components must be non-negative")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @property
    def order(self) -> int:
        return sum(self.alpha)

    def to_dict(self) -> dict:
        return {"coefficient": self.coefficient, "alpha": list(self.alpha),
                "function": self.function.to_dict()}

    @classmethod
    def from_dict(cls, record: dict) -> "Term":
        return cls(record["coefficient"], tuple(record["alpha"]), function_from_dict(record["function"]))


@dataclass(frozen=True)
class NonlinearitySpec:
    terms: tuple = ()
    dimension: int = 1

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if len(t.alpha) != self.dimension:
                raise ValueError(f"multi-index {t.alpha} does not match dimension {self.dimension}")

    @property
    def gamma(self) -> int:
        """Number of active terms (``a_alpha != 0``)."""
        return sum(1 for t in self.terms if t.coefficient != 0)

    def check_order(self, operator_order: int):
        for t in self.terms:
            if t.order > operator_order - 1:
                raise ValueError(f"|alpha| = {t.order} exceeds 2l - 1 = {operator_order - 1}")

    def __add__(self, other: "NonlinearitySpec") -> "NonlinearitySpec":
        if other.dimension != self.dimension:
            raise ValueError("dimension mismatch")
        return NonlinearitySpec(self.terms + other.terms, self.dimension)

    def to_dict(self) -> dict:
        return {"dimension": self.dimension, "terms": [t.to_dict() for t in self.terms]}

    @classmethod
    def from_dict(cls, record: dict) -> "NonlinearitySpec":
        return cls(tuple(Term.from_dict(t) for t in record.get("terms", [])), int(record.get("dimension", 1)))


@dataclass(frozen=True)
class DiffusionSpec:
    """Separable noise coefficients ``sigma_i(x, xi) = g_i(x) h_i(xi)``."""

    functions: tuple = ()
    dimension: int = 1

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        for s in self.functions:
            if s.dimension != self.dimension:
                raise ValueError("diffusion functions must live on the same torus")

    @property
    def d(self) -> int:
        return len(self.functions)

    def grid_values(self, values: np.ndarray) -> np.ndarray:
        """``sigma_i(x, u(x))`` stacked on a new axis before the grid axes."""
        if not self.functions:
            return np.zeros(values.shape[: values.ndim - self.dimension] + (0,)
                            + values.shape[values.ndim - self.dimension:])
        return np.stack([s.evaluate_grid(values) for s in self.functions], axis=-1 - self.dimension)

    def to_dict(self) -> dict:
        return {"dimension": self.dimension, "functions": [s.to_dict() for s in self.functions]}

    @classmethod
    def from_dict(cls, record: dict) -> "DiffusionSpec":
        N = int(record.get("dimension", 1))
        return cls(tuple(SeparableFunction.from_dict(s, N) for s in record.get("functions", [])), N)


@dataclass(frozen=True)
class Model:
    nonlinearity: NonlinearitySpec = field(default_factory=NonlinearitySpec)
    diffusion: DiffusionSpec = field(default_factory=DiffusionSpec)

    def __post_init__(self):
        if self.nonlinearity.dimension != self.diffusion.dimension:
            raise ValueError("drift and diffusion dimensions differ")

    @property
    def dimension(self) -> int:
        return self.nonlinearity.dimension

    def to_dict(self) -> dict:
        return {"nonlinearity": self.nonlinearity.to_dict(), "diffusion": self.diffusion.to_dict()}

    @classmethod
    def from_dict(cls, record: dict) -> "Model":
        return cls(NonlinearitySpec.from_dict(record.get("nonlinearity", {})),
                   DiffusionSpec.from_dict(record.get("diffusion", {})))


# -- batched kernels used by the solver ---------------------------------------


def _drift_coeffs(spec: NonlinearitySpec, coeffs: np.ndarray, grid: np.ndarray | None = None) -> np.ndarray:
    N = spec.dimension
    K = (coeffs.shape[-1] - 1) // 2
    out = np.zeros(coeffs.shape, dtype=complex)
    if not spec.terms:
        return out
    if grid is None:
        grid = _coeffs_to_grid(coeffs, N, oversampled_size(K))
    composed: dict[int, np.ndarray] = {}
    for t in spec.terms:
        if t.coefficient == 0:
            continue
        key = id(t.function)
        if key not in composed:
            composed[key] = _grid_to_coeffs(t.function(grid), N, K)
        out = out + t.coefficient * composed[key] * _derivative_symbol(K, t.alpha)
    return out


def _diffusion_coeffs(spec: DiffusionSpec, coeffs: np.ndarray, grid: np.ndarray | None = None) -> np.ndarray:
    """Coefficients of each ``sigma_i(., u)``; shape ``lead + (d,) + modes``."""
    N = spec.dimension
    K = (coeffs.shape[-1] - 1) // 2
    if grid is None:
        grid = _coeffs_to_grid(coeffs, N, oversampled_size(K))
    return _grid_to_coeffs(spec.grid_values(grid), N, K)


def _model_coeffs(model: Model, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    K = (coeffs.shape[-1] - 1) // 2
    grid = _coeffs_to_grid(coeffs, model.dimension, oversampled_size(K))
    return _drift_coeffs(model.nonlinearity, coeffs, grid), _diffusion_coeffs(model.diffusion, coeffs, grid)


# -- public operations --------------------------------------------------------


def eval_nonlinearity(spec: NonlinearitySpec, u: SpectralField) -> SpectralField:
    """``F(u)`` projected onto the modes of ``u``."""
    if u.dimension != spec.dimension:
        raise ValueError("field dimension does not match the nonlinearity")
    return SpectralField(_drift_coeffs(spec, u.coeffs))


def eval_diffusion_increment(spec: DiffusionSpec, u: SpectralField, dw: Sequence[float]) -> SpectralField:
    """``sum_i sigma_i(x, u(x)) dw_i``."""
    dw = np.atleast_1d(np.asarray(dw, dtype=float))
    if dw.shape != (spec.d,):
        raise ValueError(f"increment has length {dw.size}, noise dimension is {spec.d}")
    if u.dimension != spec.dimension:
        raise ValueError("field dimension does not match the diffusion")
    if spec.d == 0:
        return SpectralField.zeros(u.dimension, u.cutoff)
    sig = _diffusion_coeffs(spec, u.coeffs)
    return SpectralField(np.tensordot(dw, sig, axes=(0, 0)))


def gaussian_moment_constant(p: float) -> float:
    """``(E|Z|^p)^(1/p)`` for a standard normal ``Z``."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if float(p).is_integer() and int(p) % 2 == 0:
        # E Z^p = (p-1)!!
        return float(math.prod(range(1, int(p), 2))) ** (1.0 / p)
    val, _ = integrate.quad(lambda z: abs(z) ** p * math.exp(-0.5 * z * z), 0, math.inf)
    return (2.0 * val / math.sqrt(2 * math.pi)) ** (1.0 / p)


def _sigma_on_quadrature_grid(spec: DiffusionSpec, u: SpectralField, p: float) -> np.ndarray:
    n = quadrature_size(u.cutoff, p)
    vals = _coeffs_to_grid(u.coeffs, u.dimension, n)
    return spec.grid_values(vals)  # (d,) + grid


def gamma_norm_closed(spec: DiffusionSpec, u: SpectralField, p: float) -> float:
    """``C_p (int (sum_i sigma_i(y, u(y))^2)^(p/2) dy)^(1/p)``."""
    if p < 2:
        raise ValueError("gamma norms are computed for p >= 2")
    if spec.d == 0:
        return 0.0
    s2 = np.sum(_sigma_on_quadrature_grid(spec, u, p) ** 2, axis=0)
    return gaussian_moment_constant(p) * float(np.mean(s2 ** (p / 2))) ** (1.0 / p)


@dataclass(frozen=True)
class GammaEstimate:
    estimate: float
    std_error: float
    samples: int


def gamma_norm_mc(spec: DiffusionSpec, u: SpectralField, p: float, samples: int = 10_000,
                  seed: int = 0, chunk: int = 8192) -> GammaEstimate:
    """Monte Carlo ``sqrt(E ||sum_i xi_i sigma_i(., u)||_p^2)``.

    The standard error of the square root follows from the delta method.
    """
    if samples < 100:
        raise ValueError("gamma_norm_mc needs at least 100 samples")
    if p < 2:
        raise ValueError("gamma norms are computed for p >= 2")
    if spec.d == 0:
        return GammaEstimate(0.0, 0.0, samples)
    sig = _sigma_on_quadrature_grid(spec, u, p)
    flat = sig.reshape(spec.d, -1)
    stream = stream_id("gamma_norm")
    sq = np.empty(samples)
    for start in range(0, samples, chunk):
        count = min(chunk, samples - start)
        xi = standard_normals(seed, stream, start, count, spec.d)
        vals = np.abs(xi @ flat)
        sq[start: start + count] = np.mean(vals**p, axis=1) ** (2.0 / p)
    mean_sq = float(np.mean(sq))
    est = math.sqrt(mean_sq)
    se_sq = float(np.std(sq, ddof=1)) / math.sqrt(samples)
    return GammaEstimate(est, se_sq / (2 * est) if est > 0 else 0.0, samples)


@dataclass(frozen=True)
class Certificate:
    """Growth constant ``C_growth`` and Lipschitz constant ``C_lip``.

    ``lipschitz`` holds the per-component certified constants; for a drift
    ``weighted_lip = sum |a_alpha| Lip(f_alpha)``.
    """

    C_growth: float
    C_lip: float
    lipschitz: tuple = ()
    weighted_lip: float = 0.0


def _xi_samples() -> np.ndarray:
    tail = np.logspace(1, 6, 200)
    return np.unique(np.concatenate([np.linspace(-10, 10, 2001), tail, -tail, [0.0]]))


def _sup_ratio(fn, xi: np.ndarray) -> float:
    """``sup fn(xi)`` over samples, refined locally around the best sample."""
    vals = fn(xi)
    i = int(np.argmax(vals))
    best = float(vals[i])
    lo, hi = xi[max(i - 1, 0)], xi[min(i + 1, len(xi) - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(lambda s: -float(fn(np.array([s]))[0]), bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return best


def _certified_lip(f: ScalarFunction) -> float:
    try:
        if f.max_order < 1:
            raise NotImplementedError
        return float(f.derivative_bound(1))
    except NotImplementedError as exc:
        raise ValueError(f"{f!r} lacks a certified first-derivative bound") from exc


def growth_and_lipschitz_certify(spec, x_points: int = 128) -> Certificate:
    """Growth and Lipschitz certificates of a drift or diffusion spec.

    ``C_growth`` is the sup over sampled ``(x, xi)`` of
    ``sum sigma_i^2 / (1 + xi^2)`` (resp. ``sum f_alpha^2 / (1 + xi^2)``),
    with the ``xi`` maximiser refined by a bounded scalar search.
    ``C_lip`` is the largest certified first-derivative bound for a drift
    and ``sqrt(sum_i Lip_i^2)`` for a diffusion.
    """
    xi = _xi_samples()
    if isinstance(spec, NonlinearitySpec):
        fns = [t.function for t in spec.terms if t.coefficient != 0]
        lips = tuple(_certified_lip(f) for f in fns)
        if not fns:
            return Certificate(0.0, 0.0)

        def ratio(s):
            return sum(f(s) ** 2 for f in fns) / (1 + s**2)

        weighted = sum(abs(t.coefficient) * _certified_lip(t.function) for t in spec.terms)
        return Certificate(_sup_ratio(ratio, xi), max(lips), lips, weighted)
    if isinstance(spec, DiffusionSpec):
        if spec.d == 0:
            return Certificate(0.0, 0.0)
        for s in spec.functions:
            _certified_lip(s.h)
        lips = tuple(s.lipschitz_bound() for s in spec.functions)
        n = x_points if spec.dimension == 1 else max(16, int(round(x_points ** (1 / spec.dimension))))
        g = np.stack([s.g_grid(n).reshape(-1) for s in spec.functions])  # (d, X)
        h = np.stack([s.h(xi) for s in spec.functions])  # (d, Xi)
        total = np.einsum("dx,dz->xz", g**2, h**2) / (1 + xi**2)
        xstar = int(np.argmax(np.max(total, axis=1)))
        gx = g[:, xstar]

        def ratio(s):
            return sum(gi**2 * f.h(s) ** 2 for gi, f in zip(gx, spec.functions)) / (1 + s**2)

        best = max(float(total.max()), _sup_ratio(ratio, xi))
        return Certificate(best, math.sqrt(sum(v * v for v in lips)), lips)
    raise TypeError("expected a NonlinearitySpec or DiffusionSpec")


def sample_grid(u: SpectralField, n: int | None = None) -> tuple[list[np.ndarray], np.ndarray]:
    """Grid points and values of ``u`` (oversampled grid by default)."""
    n = n or oversampled_size(u.cutoff)
    return grid_points(n, u.dimension), u.grid_values(n)
