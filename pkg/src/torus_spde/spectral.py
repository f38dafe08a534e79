"""Real fields on the unit torus stored as truncated Fourier series.

A field of dimension ``N`` and mode cutoff ``K`` keeps the coefficients
``c_k`` for every wavevector ``k`` in ``{-K, ..., K}^N``, laid out in a
centred array of shape ``(2K+1,)*N`` (index ``k + K`` along each axis).
The torus has unit period and unit measure per axis, so

.. math:: u(x) = \\sum_k c_k \\exp(2\\pi i k\\cdot x),\\qquad \\int u\\,dx = c_0.

Most functions come in two flavours: a public one working on
:class:`SpectralField` values, and a private array version (``_coeffs``
suffix) that accepts leading batch axes and is used by the solver.
"""

from __future__ import annotations

import itertools
import json
import math
import struct
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "GridField",
    "SpectralField",
    "default_grid_size",
    "derivative",
    "forward_transform",
    "fractional_sobolev_norm",
    "inverse_transform",
    "lp_norm",
    "multi_indices",
    "oversampled_size",
    "quadrature_size",
    "sobolev_norm",
]

_MAGIC = b"TSPF"


def _even_at_least(n: int) -> int:
    n = int(n)
    return n + (n % 2)


def default_grid_size(cutoff: int) -> int:
    """Physical grid size ``2K + 2`` paired with a cutoff ``K``."""
    return 2 * cutoff + 2


def oversampled_size(cutoff: int) -> int:
    """Grid used for pointwise nonlinearities (twice the default grid)."""
    return 2 * default_grid_size(cutoff)


def quadrature_size(cutoff: int, p: float = 2.0) -> int:
    """Equal-weight quadrature grid for ``int |u|^p``.

    Exact for even integer ``p`` since ``|u|^p`` is then a trigonometric
    polynomial of degree ``pK``.
    """
    return _even_at_least(max(oversampled_size(cutoff), math.ceil(p) * cutoff + 2))


def multi_indices(dimension: int, max_order: int, *, exact: bool = False) -> list[tuple[int, ...]]:
    """All multi-indices of length ``dimension`` with order ``<= max_order``.

    Sorted by order, then lexicographically descending (``(1,0)`` before
    ``(0,1)``). With ``exact=True`` only order ``max_order`` is returned.
    """
    out = []
    orders = [max_order] if exact else range(max_order + 1)
    for order in orders:
        level = [a for a in itertools.product(range(order + 1), repeat=dimension) if sum(a) == order]
        out.extend(sorted(level, reverse=True))
    return out


# -- array kernels ----------------------------------------------------------


def _axes(dimension: int) -> tuple[int, ...]:
    return tuple(range(-dimension, 0))


def _cutoff_of(coeffs: np.ndarray, dimension: int) -> int:
    return (coeffs.shape[-1] - 1) // 2


def _mode_index(cutoff: int, n: int):
    return np.arange(-cutoff, cutoff + 1) % n


def _wavenumbers(cutoff: int, dimension: int) -> list[np.ndarray]:
    """Broadcastable integer wavenumber arrays, one per axis."""
    k = np.arange(-cutoff, cutoff + 1)
    out = []
    for j in range(dimension):
        shape = [1] * dimension
        shape[j] = 2 * cutoff + 1
        out.append(k.reshape(shape))
    return out


def wavevector_norm_sq(cutoff: int, dimension: int) -> np.ndarray:
    """``|k|^2`` on the centred coefficient layout."""
    return sum(kj.astype(float) ** 2 for kj in _wavenumbers(cutoff, dimension))


def _coeffs_to_grid(coeffs: np.ndarray, dimension: int, n: int) -> np.ndarray:
    K = _cutoff_of(coeffs, dimension)
    if n < 2 * K + 1:
        raise ValueError(f"grid size {n} cannot represent cutoff {K}")
    lead = coeffs.shape[: coeffs.ndim - dimension]
    full = np.zeros(lead + (n,) * dimension, dtype=complex)
    idx = np.ix_(*([_mode_index(K, n)] * dimension))
    full[(Ellipsis,) + idx] = coeffs
    return np.fft.ifftn(full, axes=_axes(dimension)).real * n**dimension


def _grid_to_coeffs(values: np.ndarray, dimension: int, cutoff: int) -> np.ndarray:
    n = values.shape[-1]
    if any(s != n for s in values.shape[-dimension:]):
        raise ValueError(f"grid must be a cube, got shape {values.shape[-dimension:]}")
    if n < 2 * cutoff + 1:
        raise ValueError(f"grid of size {n} too coarse for cutoff {cutoff}")
    spec = np.fft.fftn(values, axes=_axes(dimension)) / n**dimension
    idx = np.ix_(*([_mode_index(cutoff, n)] * dimension))
    return hermitian_part(spec[(Ellipsis,) + idx], dimension)


def hermitian_part(coeffs: np.ndarray, dimension: int) -> np.ndarray:
    """Project onto coefficient arrays of real fields."""
    flipped = np.flip(coeffs, axis=_axes(dimension)).conj()
    return 0.5 * (coeffs + flipped)


def _derivative_symbol(cutoff: int, alpha: Sequence[int]) -> np.ndarray | complex:
    sym: np.ndarray | complex = 1.0 + 0j
    for kj, aj in zip(_wavenumbers(cutoff, len(alpha)), alpha):
        if aj:
            sym = sym * (2j * np.pi * kj) ** aj
    return sym


def _derivative_coeffs(coeffs: np.ndarray, dimension: int, alpha: Sequence[int]) -> np.ndarray:
    if len(alpha) != dimension:
        raise ValueError(f"multi-index {tuple(alpha)} does not match dimension {dimension}")
    if any(a < 0 for a in alpha):
        raise ValueError("multi-index components must be non-negative")
    if sum(alpha) == 0:
        return coeffs.copy()
    return coeffs * _derivative_symbol(_cutoff_of(coeffs, dimension), alpha)


def _even_integer(p: float) -> bool:
    return float(p).is_integer() and int(p) % 2 == 0


def _refined_mean(mean_on, n0: int, p: float, dimension: int, rtol: float = 1e-12) -> np.ndarray:
    """``mean_on(n)`` with grid doubling for non-even ``p``.

    ``|u|^p`` is a trigonometric polynomial for even integer ``p`` and the
    quadrature grid integrates it exactly. Otherwise it has kinks at the
    zeros of ``u`` and the equal-weight rule converges only algebraically,
    so the grid is doubled until the value settles.
    """
    cur = mean_on(n0)
    if _even_integer(p):
        return cur
    cap = {1: 1 << 14, 2: 512}.get(dimension, 64)
    n = n0
    while 2 * n <= cap:
        n *= 2
        new = mean_on(n)
        done = np.all(np.abs(new - cur) <= rtol * np.maximum(np.abs(new), 1e-300))
        cur = new
        if done:
            break
    return cur


def _lp_norm_coeffs(coeffs: np.ndarray, dimension: int, p: float, n: int | None = None) -> np.ndarray:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")

    def mean_on(m):
        vals = np.abs(_coeffs_to_grid(coeffs, dimension, m))
        return np.mean(vals * vals if p == 2 else vals**p, axis=_axes(dimension))

    if n is not None:
        return mean_on(n) ** (1.0 / p)
    n0 = quadrature_size(_cutoff_of(coeffs, dimension), p)
    return _refined_mean(mean_on, n0, p, dimension) ** (1.0 / p)


def _sobolev_norm_coeffs(coeffs: np.ndarray, dimension: int, m: int, p: float) -> np.ndarray:
    if m < 0:
        raise ValueError("Sobolev order must be non-negative")
    alphas = multi_indices(dimension, m)
    derivs = [_derivative_coeffs(coeffs, dimension, a) for a in alphas]

    def total_on(n):
        return sum(_lp_norm_coeffs(d, dimension, p, n) ** p for d in derivs)

    n0 = quadrature_size(_cutoff_of(coeffs, dimension), p)
    return _refined_mean(total_on, n0, p, dimension) ** (1.0 / p)


# -- value types ------------------------------------------------------------


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class GridField:
    """Real samples on the uniform grid ``{j/n}^N`` of the unit torus."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim < 1 or any(s != v.shape[0] for s in v.shape):
            raise ValueError(f"grid values must form a cube, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def dimension(self) -> int:
        return self.values.ndim

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def points(self) -> list[np.ndarray]:
        return grid_points(self.size, self.dimension)


def grid_points(n: int, dimension: int) -> list[np.ndarray]:
    """Meshgrid (``indexing='ij'``) of the ``n``-point grid per axis."""
    x = np.arange(n) / n
    return list(np.meshgrid(*([x] * dimension), indexing="ij"))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Truncated Fourier series of a real field on the unit torus.

    Parameters
    ----------
    coeffs : ndarray
        Complex coefficients in the centred layout, shape ``(2K+1,)*N``.
        They are projected onto the Hermitian-symmetric subspace on
        construction, so the represented field is always real.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim < 1:
            raise ValueError("coefficients need at least one axis")
        if any(s != c.shape[0] for s in c.shape) or c.shape[0] % 2 == 0:
            raise ValueError(f"coefficient array must be an odd-sized cube, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", _frozen(hermitian_part(c, c.ndim)))

    # construction
    @classmethod
    def zeros(cls, dimension: int = 1, cutoff: int = 0) -> "SpectralField":
        return cls(np.zeros((2 * cutoff + 1,) * dimension, dtype=complex))

    @classmethod
    def constant(cls, value: float, dimension: int = 1, cutoff: int = 0) -> "SpectralField":
        c = np.zeros((2 * cutoff + 1,) * dimension, dtype=complex)
        c[(cutoff,) * dimension] = value
        return cls(c)

    @classmethod
    def from_function(cls, fn: Callable[..., np.ndarray], dimension: int, cutoff: int,
                      n: int | None = None) -> "SpectralField":
        """Sample ``fn(x_1, ..., x_N)`` on a grid and project onto ``|k| <= K``."""
        n = n or oversampled_size(cutoff)
        vals = np.broadcast_to(fn(*grid_points(n, dimension)), (n,) * dimension)
        return cls(_grid_to_coeffs(np.asarray(vals, dtype=float), dimension, cutoff))

    @classmethod
    def from_modes(cls, modes: dict, dimension: int, cutoff: int) -> "SpectralField":
        """Build from ``{wavevector: coefficient}``.

        Give each conjugate pair once; the ``-k`` partner is filled in.
        """
        c = np.zeros((2 * cutoff + 1,) * dimension, dtype=complex)
        for k, val in modes.items():
            k = (k,) if np.isscalar(k) else tuple(k)
            if len(k) != dimension or max(abs(x) for x in k) > cutoff:
                raise ValueError(f"wavevector {k} outside cutoff {cutoff}")
            if not any(k):
                c[(cutoff,) * dimension] += np.real(val)
                continue
            c[tuple(x + cutoff for x in k)] += val
            c[tuple(-x + cutoff for x in k)] += np.conj(val)
        return cls(c)

    # metadata
    @property
    def dimension(self) -> int:
        return self.coeffs.ndim

    @property
    def cutoff(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    def coefficient(self, k) -> complex:
        k = (k,) if np.isscalar(k) else tuple(k)
        return complex(self.coeffs[tuple(x + self.cutoff for x in k)])

    # conversions
    def to_grid(self, n: int | None = None) -> GridField:
        return GridField(_coeffs_to_grid(self.coeffs, self.dimension, n or default_grid_size(self.cutoff)))

    def grid_values(self, n: int | None = None) -> np.ndarray:
        return _coeffs_to_grid(self.coeffs, self.dimension, n or default_grid_size(self.cutoff))

    def evaluate_at(self, points: np.ndarray) -> np.ndarray:
        """Evaluate the trigonometric polynomial at arbitrary points, shape ``(M, N)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dimension:
            pts = pts.T
        K = self.cutoff
        ks = np.array(list(itertools.product(range(-K, K + 1), repeat=self.dimension)))
        phase = np.exp(2j * np.pi * pts @ ks.T)
        return (phase @ self.coeffs.reshape(-1)).real

    def resize(self, cutoff: int) -> "SpectralField":
        """Truncate or zero-pad to a new cutoff."""
        K, N = self.cutoff, self.dimension
        out = np.zeros((2 * cutoff + 1,) * N, dtype=complex)
        m = min(K, cutoff)
        src = tuple(slice(K - m, K + m + 1) for _ in range(N))
        dst = tuple(slice(cutoff - m, cutoff + m + 1) for _ in range(N))
        out[dst] = self.coeffs[src]
        return SpectralField(out)

    # arithmetic
    def _check(self, other: "SpectralField"):
        if other.dimension != self.dimension or other.cutoff != self.cutoff:
            raise ValueError("fields differ in dimension or cutoff")

    def __add__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField(self.coeffs + other.coeffs)
        return self + SpectralField.constant(other, self.dimension, self.cutoff)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return SpectralField(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def allclose(self, other: "SpectralField", atol: float = 1e-12, rtol: float = 0.0) -> bool:
        self._check(other)
        return bool(np.allclose(self.coeffs, other.coeffs, atol=atol, rtol=rtol))

    # serialisation
    def to_dict(self) -> dict:
        flat = self.coeffs.reshape(-1)
        inter = np.empty(2 * flat.size)
        inter[0::2], inter[1::2] = flat.real, flat.imag
        return {"dimension": self.dimension, "cutoff": self.cutoff, "coefficients": inter.tolist()}

    @classmethod
    def from_dict(cls, record: dict) -> "SpectralField":
        N, K = int(record["dimension"]), int(record["cutoff"])
        inter = np.asarray(record["coefficients"], dtype=float)
        if inter.size != 2 * (2 * K + 1) ** N:
            raise ValueError("coefficient count does not match dimension/cutoff")
        return cls((inter[0::2] + 1j * inter[1::2]).reshape((2 * K + 1,) * N))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SpectralField":
        return cls.from_dict(json.loads(text))

    def to_bytes(self) -> bytes:
        flat = self.coeffs.reshape(-1)
        inter = np.empty(2 * flat.size, dtype="<f8")
        inter[0::2], inter[1::2] = flat.real, flat.imag
        return _MAGIC + struct.pack("<II", self.dimension, self.cutoff) + inter.tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "SpectralField":
        if blob[:4] != _MAGIC:
            raise ValueError("not a serialised SpectralField")
        N, K = struct.unpack("<II", blob[4:12])
        inter = np.frombuffer(blob[12:], dtype="<f8")
        return cls.from_dict({"dimension": N, "cutoff": K, "coefficients": inter})


# -- public operations ------------------------------------------------------


def forward_transform(g: GridField, cutoff: int | None = None) -> SpectralField:
    """Coefficients of the trigonometric interpolant of grid data.

    The cutoff defaults to ``(n - 2) // 2`` for an ``n``-point grid, i.e. the
    cutoff whose default grid is ``g``. A larger cutoff than the grid can
    resolve raises ``ValueError``.
    """
    K = (g.size - 2) // 2 if cutoff is None else cutoff
    return SpectralField(_grid_to_coeffs(g.values, g.dimension, K))


def inverse_transform(u: SpectralField, n: int | None = None) -> GridField:
    """Sample ``u`` on the ``n``-point grid (default ``2K + 2``)."""
    return u.to_grid(n)


def derivative(u: SpectralField, alpha: Sequence[int] | int) -> SpectralField:
    """Exact spectral derivative ``D^alpha u``."""
    alpha = (alpha,) if np.isscalar(alpha) else tuple(alpha)
    return SpectralField(_derivative_coeffs(u.coeffs, u.dimension, alpha))


def lp_norm(u: SpectralField, p: float = 2.0) -> float:
    """``(int |u|^p dx)^(1/p)`` by equal-weight quadrature on an oversampled grid."""
    return float(_lp_norm_coeffs(u.coeffs, u.dimension, p))


def sobolev_norm(u: SpectralField, m: int, p: float = 2.0) -> float:
    """``W^{m,p}`` norm: ``(sum_{|a|<=m} ||D^a u||_p^p)^(1/p)``."""
    return float(_sobolev_norm_coeffs(u.coeffs, u.dimension, m, p))


def fractional_sobolev_norm(u: SpectralField, delta: float, p: float, op) -> float:
    """``||(-A)^delta u||_{L^p}`` for a diagonal operator ``op``."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if not getattr(op, "is_diagonal", False):
        raise TypeError("fractional Sobolev norms need a diagonal operator")
    lam = op.symbol(u.cutoff, u.dimension)
    return float(_lp_norm_coeffs(u.coeffs * lam**delta, u.dimension, p))


def random_field(rng: np.random.Generator, dimension: int, cutoff: int, *, decay: float = 1.0,
                 amplitude: float = 1.0, mean: bool = True) -> SpectralField:
    """Random real trigonometric polynomial with ``(1 + |k|)^-decay`` spectrum."""
    shape = (2 * cutoff + 1,) * dimension
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    weight = (1.0 + np.sqrt(wavevector_norm_sq(cutoff, dimension))) ** (-decay)
    c = amplitude * z * weight
    if not mean:
        c[(cutoff,) * dimension] = 0.0
    return SpectralField(c)


def stack(fields: Iterable[SpectralField]) -> np.ndarray:
    return np.stack([f.coeffs for f in fields])
