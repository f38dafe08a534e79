"""Catalog of smooth scalar functions with certified derivative bounds.

Every member ``f`` provides vectorised evaluation of ``f`` and its
derivatives together with certificates

* ``derivative_bound(j) >= sup_xi |f^(j)(xi)|`` for ``1 <= j <= max_order``;
* ``growth_bound() = C`` with ``|f(xi)| <= C (1 + |xi|)``.

The certificates are computed analytically (closed forms or exact maxima
of piecewise polynomials), never by sampling. Separable two-argument
functions ``g(x) h(xi)`` are built from a trigonometric polynomial ``g``
and a catalog member ``h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial

from .spectral import SpectralField, _derivative_symbol, multi_indices

__all__ = [
    "Affine",
    "AtanScaled",
    "PolynomialClamped",
    "ScalarFunction",
    "SeparableFunction",
    "Sine",
    "TanhScaled",
    "function_from_dict",
]

_UNBOUNDED_ORDER = 64


class ScalarFunction:
    """Base class for catalog members."""

    name = "abstract"
    max_order = 0

    def __call__(self, xi):
        return self.derivative(xi, 0)

    def derivative(self, xi, order: int = 1) -> np.ndarray:
        raise NotImplementedError

    def derivative_bound(self, order: int) -> float:
        raise NotImplementedError(f"{self.name} has no certified derivative bounds")

    def growth_bound(self) -> float:
        raise NotImplementedError(f"{self.name} has no growth certificate")

    def _check_order(self, order: int):
        if order < 0:
            raise ValueError("derivative order must be non-negative")
        if order > self.max_order:
            raise ValueError(f"{self.name} is certified only to order {self.max_order}, asked {order}")

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"name": self.name, **self.params()}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


@dataclass(frozen=True, repr=False)
class Affine(ScalarFunction):
    """``a xi + b``."""

    a: float = 1.0
    b: float = 0.0

    name = "affine"
    max_order = _UNBOUNDED_ORDER

    def derivative(self, xi, order: int = 1):
        self._check_order(order)
        xi = np.asarray(xi, dtype=float)
        if order == 0:
            return self.a * xi + self.b
        if order == 1:
            return np.full_like(xi, self.a)
        return np.zeros_like(xi)

    def derivative_bound(self, order: int) -> float:
        self._check_order(order)
        return abs(self.a) if order == 1 else 0.0

    def growth_bound(self) -> float:
        return max(abs(self.a), abs(self.b))

    def params(self):
        return {"a": self.a, "b": self.b}


@dataclass(frozen=True, repr=False)
class Sine(ScalarFunction):
    """``amplitude * sin(frequency * xi)``."""

    amplitude: float = 1.0
    frequency: float = 1.0

    name = "sine"
    max_order = _UNBOUNDED_ORDER

    def derivative(self, xi, order: int = 1):
        self._check_order(order)
        w = self.frequency
        return self.amplitude * w**order * np.sin(w * np.asarray(xi, dtype=float) + order * np.pi / 2)

    def derivative_bound(self, order: int) -> float:
        self._check_order(order)
        return abs(self.amplitude) * abs(self.frequency) ** order

    def growth_bound(self) -> float:
        return abs(self.amplitude)

    def params(self):
        return {"amplitude": self.amplitude, "frequency": self.frequency}


def _poly_abs_max(poly: Polynomial, lo: float, hi: float) -> float:
    """Exact ``max |poly|`` on ``[lo, hi]`` from critical points."""
    pts = [lo, hi]
    for r in poly.deriv().roots():
        if abs(r.imag) < 1e-9 and lo <= r.real <= hi:
            pts.append(r.real)
    return float(np.max(np.abs(poly(np.array(pts)))))


@dataclass(frozen=True, repr=False)
class TanhScaled(ScalarFunction):
    """``a * tanh(xi)``.

    Derivatives are polynomials in ``T = tanh(xi)``:
    ``P_0 = T`` and ``P_{j+1}(T) = P_j'(T) (1 - T^2)``.
    """

    a: float = 1.0
    order: int = 12

    name = "tanh"

    @property
    def max_order(self):
        return self.order

    @cached_property
    def _polys(self) -> list[Polynomial]:
        out = [Polynomial([0.0, 1.0])]
        sech2 = Polynomial([1.0, 0.0, -1.0])
        for _ in range(self.order):
            out.append(out[-1].deriv() * sech2)
        return out

    def derivative(self, xi, order: int = 1):
        self._check_order(order)
        return self.a * self._polys[order](np.tanh(np.asarray(xi, dtype=float)))

    def derivative_bound(self, order: int) -> float:
        self._check_order(order)
        return abs(self.a) * _poly_abs_max(self._polys[order], -1.0, 1.0)

    def growth_bound(self) -> float:
        return abs(self.a)

    def params(self):
        return {"a": self.a, "order": self.order}


@dataclass(frozen=True, repr=False)
class AtanScaled(ScalarFunction):
    """``a * arctan(xi)``; ``f^(j) = a (-1)^(j-1) (j-1)! Im[(xi - i)^-j]``."""

    a: float = 1.0
    order: int = 12

    name = "atan"

    @property
    def max_order(self):
        return self.order

    def derivative(self, xi, order: int = 1):
        self._check_order(order)
        xi = np.asarray(xi, dtype=float)
        if order == 0:
            return self.a * np.arctan(xi)
        z = (xi - 1j) ** (-order)
        return self.a * (-1) ** (order - 1) * math.factorial(order - 1) * z.imag

    def derivative_bound(self, order: int) -> float:
        self._check_order(order)
        return abs(self.a) * math.factorial(order - 1) if order >= 1 else abs(self.a) * math.pi / 2

    def growth_bound(self) -> float:
        return abs(self.a) * math.pi / 2

    def params(self):
        return {"a": self.a, "order": self.order}


def _smoothstep(n: int) -> Polynomial:
    """Degree ``2n+1`` polynomial rising 0 -> 1 on [0, 1] with ``n`` flat derivatives at both ends."""
    c = Polynomial([0.0])
    for k in range(n + 1):
        c = c + math.comb(n + k, k) * math.comb(2 * n + 1, n - k) * Polynomial([0.0, -1.0]) ** k
    return Polynomial([0.0, 1.0]) ** (n + 1) * c


@dataclass(frozen=True, repr=False)
class PolynomialClamped(ScalarFunction):
    """Polynomial ``P`` composed with a smooth clamp ``chi``.

    ``chi(xi) = xi`` on ``[-R, R]``; on ``R < |xi| < R + w`` its slope decays
    from 1 to 0 along a smoothstep, and ``chi`` is constant beyond. Hence
    ``f = P(chi)`` equals ``P`` on the field range, has bounded derivatives
    of every certified order and is constant at infinity.

    Parameters
    ----------
    coeffs : tuple of float
        ``P(xi) = sum coeffs[i] xi^i``.
    radius : float
        ``R``; choose it beyond the range of the fields of interest.
    width : float
        Transition width ``w``.
    order : int
        Certified order; the clamp is ``C^order``.
    """

    coeffs: tuple = (0.0, 1.0)
    radius: float = 10.0
    width: float = 5.0
    order: int = 6

    name = "polynomial_clamped"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.radius <= 0 or self.width <= 0:
            raise ValueError("radius and width must be positive")
        if self.order < 1:
            raise ValueError("certified order must be at least 1")

    @property
    def max_order(self):
        return self.order

    @cached_property
    def _pieces(self):
        # Transition polynomials in two local variables: s from the inner
        # edge and t = 1 - s from the plateau, each used on its half so that
        # cancellation in the high-degree coefficients stays harmless.
        P = Polynomial(self.coeffs)
        S = _smoothstep(self.order - 1)
        R, w = self.radius, self.width
        inner = (1 - S).integ()  # chi = R + w inner(s)
        outer = S.integ()  # chi = R + w (1/2 - outer(t)), using 1 - S(s) = S(t)
        return {
            "P": P,
            "right_s": P(R + w * inner), "right_t": P(R + w * (0.5 - outer)),
            "left_s": P(-R - w * inner), "left_t": P(-R - w * (0.5 - outer)),
            "top": float(P(R + 0.5 * w)), "bottom": float(P(-R - 0.5 * w)),
        }

    @staticmethod
    def _d(poly: Polynomial, order: int) -> Polynomial:
        return poly.deriv(order) if order else poly

    def derivative(self, xi, order: int = 1):
        self._check_order(order)
        pc = self._pieces
        R, w = self.radius, self.width
        xi = np.asarray(xi, dtype=float)
        out = np.empty_like(xi)
        mid = np.abs(xi) <= R
        out[mid] = self._d(pc["P"], order)(xi[mid])
        # d/dxi = (1/w) d/ds on the right, -(1/w) d/ds on the left; d/dt = -d/ds
        for side, sign, lo_mask in (("right", 1.0, xi > R), ("left", -1.0, xi < -R)):
            s = (sign * xi - R) / w
            near = lo_mask & (s < 0.5)
            far = lo_mask & (s >= 0.5) & (s < 1.0)
            out[near] = (sign / w) ** order * self._d(pc[side + "_s"], order)(s[near])
            out[far] = (-sign / w) ** order * self._d(pc[side + "_t"], order)(1.0 - s[far])
        out[xi >= R + w] = pc["top"] if order == 0 else 0.0
        out[xi <= -R - w] = pc["bottom"] if order == 0 else 0.0
        return out

    def _piece_max(self, order: int) -> float:
        pc = self._pieces
        R, w = self.radius, self.width
        best = _poly_abs_max(self._d(pc["P"], order), -R, R)
        for key in ("right_s", "right_t", "left_s", "left_t"):
            best = max(best, w**-order * _poly_abs_max(self._d(pc[key], order), 0.0, 0.5))
        return best

    def derivative_bound(self, order: int) -> float:
        self._check_order(order)
        return self._piece_max(order)

    def growth_bound(self) -> float:
        return self._piece_max(0)

    def params(self):
        return {"coeffs": list(self.coeffs), "radius": self.radius, "width": self.width,
                "order": self.order}


_CATALOG = {cls.name: cls for cls in (Affine, Sine, TanhScaled, AtanScaled, PolynomialClamped)}


def function_from_dict(record: dict) -> ScalarFunction:
    """Inverse of ``ScalarFunction.to_dict``."""
    rec = dict(record)
    name = rec.pop("name")
    if name not in _CATALOG:
        raise ValueError(f"unknown catalog function {name!r}; known: {sorted(_CATALOG)}")
    if "coeffs" in rec:
        rec["coeffs"] = tuple(rec["coeffs"])
    return _CATALOG[name](**rec)


@dataclass(frozen=True, eq=False)
class SeparableFunction:
    """``G(x, xi) = g(x) h(xi)`` with ``g`` a trigonometric polynomial."""

    g: SpectralField
    h: ScalarFunction = field(default_factory=Affine)

    @classmethod
    def constant(cls, value: float = 1.0, dimension: int = 1) -> "SeparableFunction":
        return cls(SpectralField.constant(1.0, dimension), Affine(0.0, value))

    @classmethod
    def identity(cls, dimension: int = 1, scale: float = 1.0) -> "SeparableFunction":
        return cls(SpectralField.constant(1.0, dimension), Affine(scale, 0.0))

    @property
    def dimension(self) -> int:
        return self.g.dimension

    def g_grid(self, n: int) -> np.ndarray:
        return self.g.grid_values(n)

    def evaluate_grid(self, values: np.ndarray) -> np.ndarray:
        """``g(x) h(u(x))`` given grid samples of ``u`` (leading batch axes allowed)."""
        n = values.shape[-1]
        return self.g_grid(n) * self.h(values)

    def g_sup_bound(self, order: int = 0) -> float:
        """Certified ``sup_x |D^beta g|`` over ``|beta| = order`` via ``sum |c_k| |2 pi k|^beta``."""
        best = 0.0
        for beta in multi_indices(self.dimension, order, exact=True):
            best = max(best, float(np.sum(np.abs(self.g.coeffs * _derivative_symbol(self.g.cutoff, beta)))))
        return best

    def growth_bound(self) -> float:
        return self.g_sup_bound(0) * self.h.growth_bound()

    def lipschitz_bound(self) -> float:
        """Certified Lipschitz constant in ``xi``."""
        return self.g_sup_bound(0) * self.h.derivative_bound(1)

    def to_dict(self) -> dict:
        return {"g": self.g.to_dict(), "h": self.h.to_dict()}

    @classmethod
    def from_dict(cls, record: dict, dimension: int = 1) -> "SeparableFunction":
        """``g`` may be a full field record or a number (constant ``g``)."""
        g = record.get("g", 1.0)
        g = SpectralField.constant(float(g), dimension) if np.isscalar(g) else SpectralField.from_dict(g)
        return cls(g, function_from_dict(record["h"]))
