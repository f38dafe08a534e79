"""Verifiers for superposition estimates on the torus.

The central tool is the multivariate chain rule

.. math:: D^\\gamma G(f) = \\sum_{j=1}^{|\\gamma|} \\sum C\\, G^{(j)}(f)
          \\, D^{\\alpha_1} f \\cdots D^{\\alpha_j} f,

whose integer constants are generated here by repeated differentiation of
the one-term seed ``G'(f) D^{e} f`` with term merging. Norms of
compositions are computed from exact pointwise values of the chain-rule
sum on uniform grids (equal-weight quadrature is spectrally accurate for
smooth periodic integrands); the grid is doubled until the norm settles.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .functions import ScalarFunction, SeparableFunction
from .spectral import (
    SpectralField,
    _coeffs_to_grid,
    _derivative_coeffs,
    _grid_to_coeffs,
    multi_indices,
    quadrature_size,
    sobolev_norm,
)

__all__ = [
    "ChainRuleTerm",
    "EndpointCheck",
    "FirstOrderReport",
    "InterpolationReport",
    "MoserReport",
    "chain_rule_eval",
    "chain_rule_grid",
    "composite_sobolev_norm",
    "embedding_ratio",
    "endpoint_maximum_check",
    "faa_di_bruno_terms",
    "first_order_check",
    "holder_norm",
    "interpolation_check",
    "moser_check",
    "moser_check_x_dependent",
]


@dataclass(frozen=True)
class ChainRuleTerm:
    """``constant * G^(order)(f) * prod_i D^{parts[i]} f``."""

    order: int
    parts: tuple
    constant: int

    def __post_init__(self):
        if self.order != len(self.parts) or self.order < 1:
            raise ValueError("order must equal the number of parts")
        if any(sum(a) == 0 for a in self.parts):
            raise ValueError("every part must be a nonzero multi-index")

    @property
    def gamma(self) -> tuple:
        return tuple(int(s) for s in np.sum(self.parts, axis=0))


def _unit(j: int, N: int) -> tuple:
    return tuple(int(i == j) for i in range(N))


def _canonical(parts) -> tuple:
    # descending order, then lexicographic descending
    return tuple(sorted(parts, key=lambda a: (sum(a), a), reverse=True))


def faa_di_bruno_terms(gamma: Sequence[int] | int) -> list[ChainRuleTerm]:
    """Full expansion of ``D^gamma G(f)``.

    Terms are sorted by outer order descending, then by the canonical part
    tuple descending.
    """
    gamma = (gamma,) if np.isscalar(gamma) else tuple(int(g) for g in gamma)
    if sum(gamma) < 1 or any(g < 0 for g in gamma):
        raise ValueError("chain rule needs a multi-index with |gamma| >= 1")
    N = len(gamma)
    directions = [j for j in range(N) for _ in range(gamma[j])]
    e0 = _unit(directions[0], N)
    state: dict[tuple, int] = {(e0,): 1}
    for j in directions[1:]:
        e = _unit(j, N)
        nxt: dict[tuple, int] = defaultdict(int)
        for parts, c in state.items():
            # derivative hits G^(l): new factor D^e f
            nxt[_canonical(parts + (e,))] += c
            # derivative hits one of the D^a f factors
            for i, a in enumerate(parts):
                bumped = tuple(x + y for x, y in zip(a, e))
                nxt[_canonical(parts[:i] + (bumped,) + parts[i + 1:])] += c
        state = dict(nxt)
    terms = [ChainRuleTerm(len(parts), parts, c) for parts, c in state.items()]
    terms.sort(key=lambda t: (t.order, [(sum(a), a) for a in t.parts]), reverse=True)
    return terms


def _require_order(G, order: int):
    h = G.h if isinstance(G, SeparableFunction) else G
    if h.max_order < order:
        raise ValueError(f"{h!r} is certified only to order {h.max_order}; {order} needed")


def _field_derivs(f: SpectralField, alphas, n: int) -> dict:
    return {a: _coeffs_to_grid(_derivative_coeffs(f.coeffs, f.dimension, a), f.dimension, n) for a in alphas}


def _chain_rule_values(G: ScalarFunction, f: SpectralField, gamma: tuple, n: int,
                       derivs: dict | None = None, outer: dict | None = None) -> np.ndarray:
    if sum(gamma) == 0:
        base = derivs[gamma] if derivs else f.grid_values(n)
        return G(base)
    terms = faa_di_bruno_terms(gamma)
    if derivs is None:
        need = {a for t in terms for a in t.parts} | {(0,) * f.dimension}
        derivs = _field_derivs(f, need, n)
    base = derivs[(0,) * f.dimension]
    outer = {} if outer is None else outer
    total = np.zeros_like(base)
    for t in terms:
        if t.order not in outer:
            outer[t.order] = G.derivative(base, t.order)
        prod = outer[t.order] * t.constant
        for a in t.parts:
            prod = prod * derivs[a]
        total = total + prod
    return total


def chain_rule_grid(G: ScalarFunction, f: SpectralField, gamma: Sequence[int] | int, n: int) -> np.ndarray:
    """Exact pointwise values of ``D^gamma G(f)`` on the ``n``-point grid."""
    gamma = (gamma,) if np.isscalar(gamma) else tuple(gamma)
    if len(gamma) != f.dimension:
        raise ValueError("multi-index does not match field dimension")
    _require_order(G, sum(gamma))
    return _chain_rule_values(G, f, gamma, n)


def chain_rule_eval(G: ScalarFunction, f: SpectralField, gamma: Sequence[int] | int,
                    cutoff: int | None = None, n: int | None = None) -> SpectralField:
    """Chain-rule sum evaluated on a fine grid and projected onto ``cutoff`` modes.

    Default cutoff is that of ``f``; the default grid is ``8K + 8`` points
    per axis so that aliasing of the composition stays negligible.
    """
    K = f.cutoff if cutoff is None else cutoff
    n = n or max(8 * f.cutoff + 8, 2 * K + 2)
    return SpectralField(_grid_to_coeffs(chain_rule_grid(G, f, gamma, n), f.dimension, K))


def _composite_derivs(G, f: SpectralField, betas, n: int) -> dict:
    """``D^beta G(., f(.))`` on the grid for every ``beta``; ``G`` scalar or separable."""
    top = max(sum(b) for b in betas)
    alphas = multi_indices(f.dimension, top)
    derivs = _field_derivs(f, alphas, n)
    h = G.h if isinstance(G, SeparableFunction) else G
    outer: dict = {}
    hd = {a: _chain_rule_values(h, f, a, n, derivs, outer) for a in alphas}
    if not isinstance(G, SeparableFunction):
        return {b: hd[b] for b in betas}
    gd = _field_derivs(G.g, alphas, n)
    out = {}
    for b in betas:
        acc = np.zeros_like(derivs[(0,) * f.dimension])
        for nu in itertools.product(*[range(x + 1) for x in b]):
            rest = tuple(x - y for x, y in zip(b, nu))
            c = math.prod(math.comb(x, y) for x, y in zip(b, nu))
            acc = acc + c * gd[rest] * hd[nu]
        out[b] = acc
    return out


def composite_sobolev_norm(G, f: SpectralField, m: int, p: float, *, rtol: float = 1e-10,
                           max_grid: int | None = None) -> float:
    """``||G(., f)||_{W^{m,p}}`` with grid doubling until the value settles."""
    _require_order(G, m)
    N = f.dimension
    betas = multi_indices(N, m)
    n = max(quadrature_size(max(f.cutoff, getattr(getattr(G, "g", None), "cutoff", 0)), p), 16)
    max_grid = max_grid or (4096 if N == 1 else 256)
    prev = None
    while True:
        vals = _composite_derivs(G, f, betas, n)
        total = sum(float(np.mean(np.abs(v) ** p)) for v in vals.values())
        cur = total ** (1.0 / p)
        if prev is not None and abs(cur - prev) <= rtol * max(cur, 1e-300):
            return cur
        if 2 * n > max_grid:
            return cur
        prev, n = cur, 2 * n


@dataclass(frozen=True)
class InterpolationReport:
    lhs: float
    rhs: float
    theta: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else math.inf)


def interpolation_check(f: SpectralField, m: int, p: float, alpha: Sequence[int] | int) -> InterpolationReport:
    """``||f||_{W^{|a|, mp/|a|}}`` against ``||f||_{W^{1,mp}}^(1-theta) ||f||_{W^{m,p}}^theta``."""
    alpha = (alpha,) if np.isscalar(alpha) else tuple(alpha)
    k = sum(alpha)
    if m < 2:
        raise ValueError("interpolation needs m >= 2")
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= |alpha| <= m, got |alpha| = {k}")
    theta = (k - 1) / (m - 1)
    lhs = sobolev_norm(f, k, m * p / k)
    rhs = sobolev_norm(f, 1, m * p) ** (1 - theta) * sobolev_norm(f, m, p) ** theta
    return InterpolationReport(lhs, rhs, theta)


@dataclass(frozen=True)
class MoserReport:
    """Both sides of ``||G(f)||_{W^{m,p}} <= C (1 + ||f||^m_{W^{1,mp}} + ||f||_{W^{m,p}})``."""

    lhs: float
    rhs: float
    ratio: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for v in (self.lhs, self.rhs, self.ratio):
            if not (np.isfinite(v) and v >= 0):
                raise ValueError("report entries must be finite and non-negative")


def _moser_rhs(f: SpectralField, m: int, p: float) -> float:
    return 1.0 + sobolev_norm(f, 1, m * p) ** m + sobolev_norm(f, m, p)


def moser_check(G: ScalarFunction, f: SpectralField, m: int, p: float) -> MoserReport:
    if m < 2:
        raise ValueError("moser_check needs m >= 2")
    if p < 1:
        raise ValueError("p must be >= 1")
    lhs = composite_sobolev_norm(G, f, m, p)
    rhs = _moser_rhs(f, m, p)
    return MoserReport(lhs, rhs, lhs / rhs, {"G": G.to_dict(), "m": m, "p": p,
                                             "f_cutoff": f.cutoff, "f_dimension": f.dimension})


def moser_check_x_dependent(G: SeparableFunction, f: SpectralField, m: int, p: float) -> MoserReport:
    """As :func:`moser_check` with ``G(x, f(x)) = g(x) h(f(x))``."""
    if m < 2:
        raise ValueError("moser_check needs m >= 2")
    if G.dimension != f.dimension:
        raise ValueError("outer function and field live on different tori")
    G.h.growth_bound()  # linear growth is part of the hypothesis
    lhs = composite_sobolev_norm(G, f, m, p)
    rhs = _moser_rhs(f, m, p)
    return MoserReport(lhs, rhs, lhs / rhs, {"G": G.to_dict(), "m": m, "p": p})


@dataclass(frozen=True)
class FirstOrderReport:
    lhs: float
    rhs: float
    constant: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.constant * self.rhs * (1 + 1e-10)


def first_order_check(G, f: SpectralField, p: float) -> FirstOrderReport:
    """``||G(f)||_{W^{1,p}}`` against ``1 + ||f||_{W^{1,p}}``.

    For scalar ``G`` the constant is ``max(growth, Lip)``; for separable
    ``g(x) h(xi)`` it is ``growth(h) (sup|g| + N^(1/p) sup|Dg|) + sup|g| Lip(h)``.
    """
    _require_order(G, 1)
    lhs = composite_sobolev_norm(G, f, 1, p)
    rhs = 1.0 + sobolev_norm(f, 1, p)
    if isinstance(G, SeparableFunction):
        g0, g1 = G.g_sup_bound(0), G.g_sup_bound(1)
        const = G.h.growth_bound() * (g0 + f.dimension ** (1 / p) * g1) + g0 * G.h.derivative_bound(1)
    else:
        const = max(G.growth_bound(), G.derivative_bound(1))
    return FirstOrderReport(lhs, rhs, const)


def _torus_distances(n: int, N: int) -> np.ndarray:
    s = np.arange(n) / n
    d1 = np.minimum(s, 1 - s)
    grids = np.meshgrid(*([d1] * N), indexing="ij")
    return np.sqrt(sum(g**2 for g in grids))


def _holder_quotient(v: np.ndarray, lam: float) -> float:
    n, N = v.shape[0], v.ndim
    dist = _torus_distances(n, N)
    best = 0.0
    for shift in itertools.product(range(n), repeat=N):
        if not any(shift):
            continue
        diff = np.max(np.abs(np.roll(v, shift, axis=tuple(range(N))) - v))
        best = max(best, diff / dist[shift] ** lam)
    return best


def holder_norm(u: SpectralField, k: int, lam: float, n: int | None = None) -> float:
    """Discrete ``C^{k,lam}`` norm on the ``n``-point grid.

    ``max_{|a|<=k} sup|D^a u|`` plus the largest ``lam``-Holder quotient of
    the order-``k`` derivatives over all grid pairs, using the periodic
    distance.
    """
    if not 0 < lam < 1:
        raise ValueError("Holder exponent must lie in (0, 1)")
    if k < 0:
        raise ValueError("k must be non-negative")
    N = u.dimension
    n = n or max(4 * u.cutoff + 4, 64 if N == 1 else 32)
    sup = 0.0
    quot = 0.0
    for a in multi_indices(N, k):
        v = _coeffs_to_grid(_derivative_coeffs(u.coeffs, N, a), N, n)
        sup = max(sup, float(np.max(np.abs(v))))
        if sum(a) == k:
            quot = max(quot, _holder_quotient(v, lam))
    return sup + quot


def embedding_ratio(u: SpectralField, k: int, lam: float, m: int, p: float, n: int | None = None) -> float:
    """``||u||_{C^{k,lam}} / ||u||_{W^{m,p}}`` for ``m - N/p > k + lam``."""
    if p <= u.dimension or m - u.dimension / p <= k + lam:
        raise ValueError("need p > N and m - N/p > k + lam for the embedding")
    return holder_norm(u, k, lam, n) / sobolev_norm(u, m, p)


@dataclass(frozen=True)
class EndpointCheck:
    values: tuple
    argmax: int
    at_endpoint: bool


def endpoint_maximum_check(a: float, b: float, m: int) -> EndpointCheck:
    """Maximise ``x -> a^x (b/a)^((m-x)/(m-1))`` over integers ``1..m``."""
    if a <= 0 or b <= 0 or m < 2:
        raise ValueError("need a, b > 0 and m >= 2")
    xs = np.arange(1, m + 1)
    logs = xs * math.log(a) + (m - xs) / (m - 1) * (math.log(b) - math.log(a))
    top = float(np.max(logs))
    i = int(np.argmax(logs))
    tol = 1e-12 * max(1.0, abs(top))
    ends = max(logs[0], logs[-1])
    return EndpointCheck(tuple(np.exp(logs).tolist()), int(xs[i]), bool(ends >= top - tol))
