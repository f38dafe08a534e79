"""Strongly elliptic operators, their semigroups and fractional powers.

Two realisations of the positive operator ``-A`` are provided:

* :class:`DiagonalOperator` -- a Fourier multiplier ``lambda(k)`` (default
  ``(nu (2 pi |k|)^2 + mu)^l``). Semigroup, powers and operator norms are
  exact.
* :class:`DivergenceFormOperator` -- ``-div(A(x) grad u) + c u`` with
  trigonometric-polynomial coefficients, realised as a Galerkin matrix on
  the retained Fourier modes and diagonalised once per cutoff.

Both expose :meth:`apply_function`, applying ``phi(-A)`` for a scalar
function ``phi`` of the eigenvalues to coefficient arrays with arbitrary
leading batch axes.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .spectral import (
    SpectralField,
    _derivative_symbol,
    _lp_norm_coeffs,
    _wavenumbers,
    hermitian_part,
    random_field,
    wavevector_norm_sq,
)

__all__ = [
    "DiagonalOperator",
    "DivergenceFormOperator",
    "GalerkinMatrix",
    "SmoothingCheck",
    "apply_fractional_power",
    "apply_semigroup",
    "b_operator",
    "b_operator_multiplier_bound",
    "b_operator_norm_probe",
    "default_delta",
    "smoothing_bound_check",
]


def default_delta(order: int) -> float:
    """``(2l - 1) / (2l)`` for an operator of order ``2l``."""
    return (order - 1) / order


@dataclass(frozen=True)
class DiagonalOperator:
    """Fourier multiplier ``-A e_k = lambda(k) e_k``.

    Parameters
    ----------
    l : int
        Half the order; the operator has order ``2l``.
    shift : float
        ``mu > 0`` in the default symbol; keeps 0 in the resolvent set.
    diffusivity : float
        ``nu > 0`` scaling the principal part of the default symbol.
    symbol_fn : callable, optional
        Custom symbol ``k -> lambda`` taking an integer array of shape
        ``(..., N)``. Must be positive and bounded below by a positive
        multiple of ``|2 pi k|^(2l)``.
    """

    l: int = 1
    shift: float = 1.0
    diffusivity: float = 1.0
    symbol_fn: Callable[[np.ndarray], np.ndarray] | None = None

    is_diagonal = True

    def __post_init__(self):
        if self.l < 1:
            raise ValueError("operator order 2l must be at least 2")
        if self.symbol_fn is None and (self.shift <= 0 or self.diffusivity <= 0):
            raise ValueError("shift and diffusivity must be positive")

    @property
    def order(self) -> int:
        return 2 * self.l

    def symbol(self, cutoff: int, dimension: int) -> np.ndarray:
        """``lambda(k)`` on the centred coefficient layout."""
        if self.symbol_fn is None:
            k2 = wavevector_norm_sq(cutoff, dimension)
            return (self.diffusivity * (2 * np.pi) ** 2 * k2 + self.shift) ** self.l
        ks = np.stack(np.broadcast_arrays(*_wavenumbers(cutoff, dimension)), axis=-1)
        lam = np.asarray(self.symbol_fn(ks), dtype=float)
        if np.any(lam <= 0):
            raise ValueError("symbol must be strictly positive (0 in the resolvent set)")
        return lam

    def ellipticity_constant(self, cutoff: int, dimension: int) -> float:
        """Largest ``a0`` with ``lambda(k) >= a0 |2 pi k|^(2l)`` on retained modes."""
        lam = self.symbol(cutoff, dimension)
        k2 = wavevector_norm_sq(cutoff, dimension)
        mask = k2 > 0
        if not mask.any():
            return math.inf
        return float(np.min(lam[mask] / ((2 * np.pi) ** 2 * k2[mask]) ** self.l))

    def apply_function(self, fn: Callable[[np.ndarray], np.ndarray], coeffs: np.ndarray,
                       dimension: int) -> np.ndarray:
        K = (coeffs.shape[-1] - 1) // 2
        return coeffs * fn(self.symbol(K, dimension))

    def to_dict(self) -> dict:
        if self.symbol_fn is not None:
            raise ValueError("custom symbols are not serialisable")
        return {"kind": "diagonal", "order": self.order, "shift": self.shift,
                "diffusivity": self.diffusivity}


@dataclass(frozen=True, eq=False)
class GalerkinMatrix:
    """Matrix of ``A`` on the retained modes, in the exponential basis.

    ``modes[i]`` is the wavevector of row/column ``i``; the ordering is the
    row-major flattening of the centred coefficient layout.
    """

    matrix: np.ndarray
    modes: np.ndarray

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))

    def to_json(self) -> str:
        return json.dumps({
            "modes": self.modes.tolist(),
            "real": self.matrix.real.tolist(),
            "imag": self.matrix.imag.tolist(),
        })


@dataclass(frozen=True, eq=False)
class DivergenceFormOperator:
    """``-A u = -sum_ij d_i(A_ij d_j u) + c u`` on the torus.

    ``coefficients[i][j]`` are real trigonometric polynomials with
    ``A_ij = A_ji``; the pointwise matrix must be uniformly positive
    definite. The shift ``c > 0`` removes the constant mode from the kernel.
    """

    coefficients: Sequence[Sequence[SpectralField]]
    shift: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    is_diagonal = False
    l = 1

    def __post_init__(self):
        N = len(self.coefficients)
        if any(len(row) != N for row in self.coefficients):
            raise ValueError("coefficient matrix must be square")
        for i, j in itertools.product(range(N), repeat=2):
            a, b = self.coefficients[i][j], self.coefficients[j][i]
            if a.dimension != N:
                raise ValueError("coefficient fields must live on the N-torus")
            if a.cutoff != b.cutoff or not np.allclose(a.coeffs, b.coeffs, atol=1e-14):
                raise ValueError("coefficients must satisfy A_ij = A_ji")
        if self.shift <= 0:
            raise ValueError("zeroth-order shift must be positive")
        if self.ellipticity_constant() <= 0:
            raise ValueError("coefficients violate uniform ellipticity")

    @property
    def order(self) -> int:
        return 2

    @property
    def dimension(self) -> int:
        return len(self.coefficients)

    def ellipticity_constant(self, n: int = 64) -> float:
        """Minimum over a grid of the smallest eigenvalue of ``A(x)``."""
        N = len(self.coefficients)
        vals = np.empty((n,) * N + (N, N))
        for i, j in itertools.product(range(N), repeat=2):
            vals[..., i, j] = self.coefficients[i][j].grid_values(n)
        return float(np.min(np.linalg.eigvalsh(vals)))

    def galerkin_matrix(self, cutoff: int) -> GalerkinMatrix:
        N = self.dimension
        modes = np.array(list(itertools.product(range(-cutoff, cutoff + 1), repeat=N)))
        diff = modes[:, None, :] - modes[None, :, :]
        M = np.zeros((len(modes), len(modes)), dtype=complex)
        for i, j in itertools.product(range(N), repeat=2):
            a = self.coefficients[i][j]
            Ka = a.cutoff
            inside = np.all(np.abs(diff) <= Ka, axis=-1)
            hat = np.zeros(M.shape, dtype=complex)
            idx = tuple((diff[..., ax] + Ka)[inside] for ax in range(N))
            hat[inside] = a.coeffs[idx]
            M += (2 * np.pi) ** 2 * np.outer(modes[:, i], modes[:, j]) * hat
        M += self.shift * np.eye(len(modes))
        return GalerkinMatrix(-M, modes)

    def _eig(self, cutoff: int):
        if cutoff not in self._cache:
            G = self.galerkin_matrix(cutoff).matrix
            w, V = np.linalg.eigh(-0.5 * (G + G.conj().T))
            self._cache[cutoff] = (w, V)
        return self._cache[cutoff]

    def eigenvalues(self, cutoff: int) -> np.ndarray:
        """Eigenvalues of ``-A`` on the retained modes (ascending)."""
        return self._eig(cutoff)[0]

    def apply_function(self, fn: Callable[[np.ndarray], np.ndarray], coeffs: np.ndarray,
                       dimension: int) -> np.ndarray:
        K = (coeffs.shape[-1] - 1) // 2
        w, V = self._eig(K)
        lead = coeffs.shape[: coeffs.ndim - dimension]
        flat = coeffs.reshape(lead + (-1,))
        out = ((flat @ V.conj()) * fn(w)) @ V.T
        return hermitian_part(out.reshape(coeffs.shape), dimension)

    def to_dict(self) -> dict:
        return {"kind": "divergence", "shift": self.shift,
                "coefficients": [[a.to_dict() for a in row] for row in self.coefficients]}


def _check_field(op, u: SpectralField):
    if not op.is_diagonal and u.dimension != op.dimension:
        raise ValueError("field dimension does not match operator")


def apply_semigroup(op, t: float, u: SpectralField) -> SpectralField:
    """``S(t) u = exp(tA) u``."""
    if t < 0:
        raise ValueError("semigroup time must be non-negative")
    _check_field(op, u)
    if t == 0:
        return u
    return SpectralField(op.apply_function(lambda lam: np.exp(-t * lam), u.coeffs, u.dimension))


def apply_fractional_power(op, delta: float, u: SpectralField) -> SpectralField:
    """``(-A)^delta u``; negative ``delta`` gives the bounded inverse powers."""
    _check_field(op, u)
    if delta == 0:
        return u
    return SpectralField(op.apply_function(lambda lam: lam**delta, u.coeffs, u.dimension))


@dataclass(frozen=True)
class SmoothingCheck:
    measured: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.measured <= self.bound * (1 + 1e-12)


def smoothing_bound_check(op: DiagonalOperator, delta: float, t: float, *, dimension: int = 1,
                          cutoff: int | None = None) -> SmoothingCheck:
    """Compare ``||(-A)^delta S(t)||_{L^2}`` with ``(delta/e)^delta t^-delta``.

    For the default (radially increasing) symbol the cutoff is grown until
    ``lambda(K e_1) >= delta/t``; beyond that box ``lambda^delta e^{-t lambda}``
    only decreases, so ``measured`` is the exact norm on all of ``L^2``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not op.is_diagonal:
        raise TypeError("smoothing check needs a diagonal operator")
    K = cutoff
    if K is None:
        K = 8
        if op.symbol_fn is None:
            while op.symbol(K, 1)[-1] < delta / t:
                K *= 2
    lam = op.symbol(K, dimension)
    # log form avoids underflow of exp(-t lam) for large lam
    measured = float(np.max(np.exp(delta * np.log(lam) - t * lam)))
    bound = (delta / math.e) ** delta * t ** (-delta)
    return SmoothingCheck(measured, bound)


def _normalise_terms(terms, dimension: int, order: int):
    out = []
    for a, alpha in terms:
        alpha = (alpha,) if np.isscalar(alpha) else tuple(alpha)
        if len(alpha) != dimension:
            raise ValueError(f"multi-index {alpha} does not match dimension {dimension}")
        if sum(alpha) > order - 1:
            raise ValueError(f"|alpha| = {sum(alpha)} exceeds 2l - 1 = {order - 1}")
        out.append((float(a), alpha))
    return out


def b_operator(op, terms, z: Sequence[SpectralField], delta: float | None = None, *,
               dimension: int = 1, cutoff: int = 0) -> SpectralField:
    """``(-A)^-delta sum_alpha a_alpha D^alpha z_alpha``.

    ``terms`` is a list of ``(a_alpha, alpha)``; ``z`` has one field per
    term. ``dimension``/``cutoff`` only shape the zero result of an empty
    term list.
    """
    if len(terms) != len(z):
        raise ValueError(f"{len(terms)} terms but {len(z)} fields")
    if not terms:
        return SpectralField.zeros(dimension, cutoff)
    N, K = z[0].dimension, z[0].cutoff
    delta = default_delta(op.order) if delta is None else delta
    acc = np.zeros_like(z[0].coeffs)
    for (a, alpha), zf in zip(_normalise_terms(terms, N, op.order), z):
        if zf.dimension != N or zf.cutoff != K:
            raise ValueError("all fields must share dimension and cutoff")
        acc = acc + a * zf.coeffs * _derivative_symbol(K, alpha)
    return apply_fractional_power(op, -delta, SpectralField(acc))


def b_operator_multiplier_bound(op: DiagonalOperator, terms, delta: float | None = None, *,
                                dimension: int = 1, cutoff: int = 64) -> float:
    """``sup_k sum |a_alpha (2 pi k)^alpha| lambda(k)^-delta`` over retained modes.

    An upper bound on the ``L^2(R^gamma) -> L^2`` norm of the operator by
    Cauchy-Schwarz, computed mode by mode.
    """
    delta = default_delta(op.order) if delta is None else delta
    lam = op.symbol(cutoff, dimension)
    acc = 0.0
    for a, alpha in _normalise_terms(terms, dimension, op.order):
        acc = acc + (abs(a) * np.abs(_derivative_symbol(cutoff, alpha))) ** 2
    return float(np.max(np.sqrt(acc) * lam ** (-delta))) if terms else 0.0


def b_operator_norm_probe(op, terms, p: float = 2.0, trials: int = 32, delta: float | None = None, *,
                          dimension: int = 1, cutoff: int = 16, seed: int = 0) -> float:
    """Largest ``||B z||_p / ||z||_{L^p(R^gamma)}`` over random trigonometric ``z``.

    ``||z||_{L^p(R^gamma)}`` uses the ``p``-norm on ``R^gamma``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if not terms:
        return 0.0
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        decay = rng.uniform(0.0, 2.0)
        z = [random_field(rng, dimension, cutoff, decay=decay) for _ in terms]
        num = float(_lp_norm_coeffs(b_operator(op, terms, z, delta).coeffs, dimension, p))
        den = sum(float(_lp_norm_coeffs(zf.coeffs, dimension, p)) ** p for zf in z) ** (1 / p)
        best = max(best, num / den)
    return best


def operator_from_dict(record: dict):
    kind = record.get("kind", "diagonal")
    if kind == "diagonal":
        order = int(record.get("order", 2))
        if order % 2:
            raise ValueError("operator order must be even")
        return DiagonalOperator(l=order // 2, shift=float(record.get("shift", 1.0)),
                                diffusivity=float(record.get("diffusivity", 1.0)))
    if kind == "divergence":
        coeffs = [[SpectralField.from_dict(a) for a in row] for row in record["coefficients"]]
        return DivergenceFormOperator(coeffs, float(record.get("shift", 1.0)))
    raise ValueError(f"unknown operator kind {kind!r}")


def grid_coefficients(op: DivergenceFormOperator, n: int) -> np.ndarray:
    """Pointwise coefficient matrices ``A(x)`` on the ``n``-point grid."""
    N = op.dimension
    out = np.empty((n,) * N + (N, N))
    for i, j in itertools.product(range(N), repeat=2):
        out[..., i, j] = op.coefficients[i][j].grid_values(n)
    return out


