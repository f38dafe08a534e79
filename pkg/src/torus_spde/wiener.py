"""Reproducible Wiener paths with nested Brownian-bridge refinement.

A path with ``J = J0 * 2**r`` steps (``J0`` odd) is built from a coarse
random walk on ``J0`` steps followed by ``r`` bridge levels, each inserting
midpoints. Every level draws from its own counter-based stream keyed by
``(seed, path_index, J0, d, level)``, so the path at ``2J`` steps contains
the path at ``J`` steps bit for bit: coarse increments are exact pairwise
sums of fine ones.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .rng import standard_normals, stream_id

__all__ = ["WienerPath", "sample_wiener_path", "sample_wiener_paths", "odd_part"]


def odd_part(J: int) -> tuple[int, int]:
    """``(J0, r)`` with ``J = J0 * 2**r`` and ``J0`` odd."""
    if J < 1:
        raise ValueError("need at least one time step")
    r = 0
    while J % 2 == 0:
        J //= 2
        r += 1
    return J, r


@dataclass(frozen=True, eq=False)
class WienerPath:
    """``W(t_j)`` for ``j = 0..J`` on a uniform grid of ``[0, T]``; ``W(0) = 0``."""

    values: np.ndarray
    T: float
    seed: int = 0
    path_index: int = 0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 2:
            raise ValueError("values must have shape (J+1, d) with J >= 1")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def J(self) -> int:
        return self.values.shape[0] - 1

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def dt(self) -> float:
        return self.T / self.J

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.J + 1)

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    def window(self, j0: int, j1: int) -> "WienerPath":
        """Restriction to ``[t_j0, t_j1]``, shifted to start at 0."""
        if not 0 <= j0 < j1 <= self.J:
            raise ValueError("invalid window")
        return WienerPath(self.values[j0: j1 + 1] - self.values[j0], (j1 - j0) * self.dt,
                          self.seed, self.path_index)

    def coarsen(self, factor: int) -> "WienerPath":
        if self.J % factor:
            raise ValueError("factor must divide the step count")
        return WienerPath(self.values[::factor], self.T, self.seed, self.path_index)

    def with_increments(self, increments: np.ndarray) -> "WienerPath":
        """Same metadata, new increments (used for perturbation tests)."""
        inc = np.asarray(increments, dtype=float)
        vals = np.vstack([np.zeros((1, inc.shape[1])), np.cumsum(inc, axis=0)])
        return WienerPath(vals, self.T, self.seed, self.path_index)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.float64(self.T).tobytes())
        h.update(np.ascontiguousarray(self.values).tobytes())
        return h.hexdigest()


def sample_wiener_path(d: int, T: float, J: int, seed: int = 0, path_index: int = 0) -> WienerPath:
    """Counter-based ``d``-dimensional Wiener path on ``J`` uniform steps."""
    if d < 0:
        raise ValueError("noise dimension must be non-negative")
    if T <= 0:
        raise ValueError("horizon must be positive")
    J0, r = odd_part(J)
    if d == 0:
        return WienerPath(np.zeros((J + 1, 0)), T, seed, path_index)
    h = T / J0
    z = standard_normals(seed, stream_id("wiener", path_index, J0, d, 0), 0, J0, d)
    W = np.vstack([np.zeros((1, d)), np.cumsum(np.sqrt(h) * z, axis=0)])
    for level in range(1, r + 1):
        n = W.shape[0] - 1
        z = standard_normals(seed, stream_id("wiener", path_index, J0, d, level), 0, n, d)
        mid = 0.5 * (W[:-1] + W[1:]) + 0.5 * np.sqrt(h) * z
        fine = np.empty((2 * n + 1, d))
        fine[0::2] = W
        fine[1::2] = mid
        W = fine
        h /= 2
    return WienerPath(W, T, seed, path_index)


def sample_wiener_paths(d: int, T: float, J: int, seed: int, path_indices) -> np.ndarray:
    """Increments of several paths, shape ``(P, J, d)``."""
    return np.stack([sample_wiener_path(d, T, J, seed, int(i)).increments for i in path_indices])
