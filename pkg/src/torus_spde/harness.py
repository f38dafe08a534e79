"""Monte Carlo estimation of Sobolev moments along Picard iterates.

For every Picard level ``n`` the harness estimates

* ``K_n = E sup_t ||u^n(t)||^q_{W^{m,p}}`` and
* ``L_n = E sup_t ||u^n(t)||^{mq}_{W^{1,mp}}``,

with the supremum taken over the time grid and standard errors from batch
means. Paths are processed in fixed chunks; each chunk is independent and
keyed by path index, so results do not depend on the thread count
(``TORUS_SPDE_THREADS``).
"""

from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .solver import _picard_batch
from .spectral import _sobolev_norm_coeffs
from .wiener import sample_wiener_path

__all__ = [
    "MomentReport",
    "ScalingStudy",
    "UniformityResult",
    "batch_means",
    "run_moments",
    "theorem_scaling_study",
    "uniformity_check",
]

CHUNK = 10


def batch_means(x: np.ndarray, batches: int = 20) -> tuple[float, float]:
    """Mean and batch-means standard error of per-path values."""
    x = np.asarray(x, dtype=float)
    M = x.shape[0]
    mean = float(np.mean(x))
    B = min(M, batches)
    if B < 2 or np.all(x == x[0]):
        return mean, 0.0
    groups = np.array_split(x, B)
    bm = np.array([g.mean() for g in groups])
    sizes = np.array([len(g) for g in groups])
    # weighted batch variance handles unequal batch sizes
    var = np.sum(sizes * (bm - mean) ** 2) / (B - 1) / M
    return mean, float(math.sqrt(max(var, 0.0)))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("TORUS_SPDE_THREADS", "1")))
    except ValueError:
        return 1


def _digest(a: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()


@dataclass
class _ChunkResult:
    ids: list
    sup_q: np.ndarray  # (P, levels)
    sup_mq: np.ndarray
    sup_q_coarse: np.ndarray
    per_time: np.ndarray  # (levels, J+1) sums over paths
    u0_q: np.ndarray  # (P,)
    u0_mq: np.ndarray
    converged: np.ndarray
    hashes_ok: bool


def _run_chunk(cfg: ExperimentConfig, ids: list) -> _ChunkResult:
    sc = cfg.solver
    N, K, m, p, q = sc.dimension, sc.K, sc.m, sc.p, sc.q
    d = sc.model.diffusion.d
    dW = np.stack([sample_wiener_path(d, sc.T, sc.J, cfg.seed, i).increments for i in ids])
    u0 = np.stack([cfg.initial.sample(i, cfg.seed, K, N, m, p) for i in ids])
    levels = sc.n_max + 1
    P = len(ids)
    sup_q = np.zeros((P, levels))
    sup_mq = np.zeros((P, levels))
    sup_q_coarse = np.zeros((P, levels))
    per_time = np.zeros((levels, sc.J + 1))
    state = {"ok": True}

    def observer(n, U):
        U.flags.writeable = False
        bad = ~np.all(np.isfinite(U.reshape(P, -1)), axis=1)
        if bad.any():
            raise RuntimeError(f"non-finite solution on path {ids[int(np.argmax(bad))]} at Picard level {n}")
        before = _digest(U)
        wmp = _sobolev_norm_coeffs(U, N, m, p)
        w1 = _sobolev_norm_coeffs(U, N, 1, m * p)
        sup_q[:, n] = np.max(wmp, axis=1) ** q
        sup_q_coarse[:, n] = np.max(wmp[:, ::2], axis=1) ** q
        sup_mq[:, n] = np.max(w1, axis=1) ** (m * q)
        per_time[n] = np.sum(wmp**q, axis=0)
        state["ok"] &= _digest(U) == before

    D, conv, _ = _picard_batch(sc, dW, u0, stop_on_tol=False, observer=observer)
    u0_q = _sobolev_norm_coeffs(u0, N, m, p) ** q
    u0_mq = _sobolev_norm_coeffs(u0, N, 1, m * p) ** (m * q)
    return _ChunkResult(list(ids), sup_q, sup_mq, sup_q_coarse, per_time, u0_q, u0_mq, conv, state["ok"])


@dataclass
class MomentReport:
    """Moment estimates per Picard level ``n = 0..n_max``."""

    K: np.ndarray
    K_se: np.ndarray
    L: np.ndarray
    L_se: np.ndarray
    u0_q: float
    u0_q_se: float
    u0_mq: float
    u0_mq_se: float
    per_time: np.ndarray
    times: np.ndarray
    sup_grid_gap: np.ndarray
    converged_fraction: float
    paths: int
    config: dict = field(default_factory=dict)
    config_hash: str = ""
    hashes_consistent: bool = True

    @property
    def levels(self) -> int:
        return len(self.K)

    @property
    def bound_ratio(self) -> float:
        """``K_{n_max} / (1 + E||u0||^q_{W^{m,p}} + E||u0||^{mq}_{W^{1,mp}})``."""
        return float(self.K[-1] / (1 + self.u0_q + self.u0_mq))

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash, "paths": self.paths,
            "K": self.K.tolist(), "K_se": self.K_se.tolist(), "L": self.L.tolist(), "L_se": self.L_se.tolist(),
            "u0_q": self.u0_q, "u0_q_se": self.u0_q_se, "u0_mq": self.u0_mq, "u0_mq_se": self.u0_mq_se,
            "sup_grid_gap": self.sup_grid_gap.tolist(), "converged_fraction": self.converged_fraction,
            "bound_ratio": self.bound_ratio, "hashes_consistent": self.hashes_consistent,
            "config": self.config,
        }


def run_moments(cfg: ExperimentConfig, *, chunk: int = CHUNK) -> MomentReport:
    """Picard iterates for ``cfg.paths`` paths and their Sobolev moments."""
    sc = cfg.solver
    M = cfg.paths
    groups = [list(range(a, min(a + chunk, M))) for a in range(0, M, chunk)]
    threads = _threads()
    if threads > 1 and len(groups) > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(lambda g: _run_chunk(cfg, g), groups))
    else:
        results = [_run_chunk(cfg, g) for g in groups]
    sup_q = np.concatenate([r.sup_q for r in results])
    sup_mq = np.concatenate([r.sup_mq for r in results])
    coarse = np.concatenate([r.sup_q_coarse for r in results])
    per_time = sum(r.per_time for r in results) / M
    u0_q = np.concatenate([r.u0_q for r in results])
    u0_mq = np.concatenate([r.u0_mq for r in results])
    levels = sc.n_max + 1
    K, K_se, L, L_se = (np.zeros(levels) for _ in range(4))
    for n in range(levels):
        K[n], K_se[n] = batch_means(sup_q[:, n])
        L[n], L_se[n] = batch_means(sup_mq[:, n])
    Kc = coarse.mean(axis=0)
    gap = np.where(K > 0, (K - Kc) / np.where(K > 0, K, 1.0), 0.0)
    a, a_se = batch_means(u0_q)
    b, b_se = batch_means(u0_mq)
    conv = float(np.mean(np.concatenate([r.converged for r in results])))
    return MomentReport(K, K_se, L, L_se, a, a_se, b, b_se, per_time, sc.times, gap, conv, M,
                        cfg.to_dict(), cfg.config_hash(), all(r.hashes_ok for r in results))


@dataclass(frozen=True)
class UniformityResult:
    plateau_pass: bool
    K_sequence: tuple
    threshold: float
    tail_ratio: float


def uniformity_check(report) -> UniformityResult:
    """``K_{n_max} <= 1.1 K_{ceil(n_max/2)} + 3 SE`` with the two SEs combined in quadrature.

    ``report`` needs ``K`` and ``K_se`` sequences. ``tail_ratio`` is the
    median ratio of successive increments ``|K_{n+1} - K_n| / |K_n - K_{n-1}|``
    over the second half (a fitted geometric rate; 0 when flat).
    """
    K = np.asarray(report.K, dtype=float)
    se = np.asarray(report.K_se, dtype=float)
    n_max = len(K) - 1
    if n_max < 5:
        raise ValueError("uniformity check needs n_max >= 5")
    mid = math.ceil(n_max / 2)
    thr = 1.1 * K[mid] + 3.0 * math.hypot(se[mid], se[n_max])
    inc = np.abs(np.diff(K[mid - 1:]))
    rat = [b / a for a, b in zip(inc[:-1], inc[1:]) if a > 1e-14 * max(K.max(), 1.0)]
    tail = float(np.median(rat)) if rat else 0.0
    return UniformityResult(bool(K[n_max] <= thr), tuple(K.tolist()), float(thr), tail)


@dataclass(frozen=True)
class ScalingRow:
    scale: float
    lhs: float
    lhs_se: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs


@dataclass(frozen=True)
class ScalingStudy:
    rows: tuple
    C: float

    def table(self) -> list[dict]:
        return [{"scale": r.scale, "lhs": r.lhs, "lhs_se": r.lhs_se, "rhs": r.rhs, "ratio": r.ratio}
                for r in self.rows]


def theorem_scaling_study(cfg: ExperimentConfig, scales) -> ScalingStudy:
    """Fit the smallest ``C`` with ``E sup||u||^q <= C (1 + E||u0||^q_{W^{m,p}} + E||u0||^{mq}_{W^{1,mp}})``.

    The left side uses the last Picard level of :func:`run_moments` with
    ``u0 -> s u0``; ``C`` is the largest ratio over the given scales.
    """
    scales = [float(s) for s in scales]
    if any(s < 0 for s in scales):
        raise ValueError("scales must be non-negative")
    rows = []
    for s in scales:
        rep = run_moments(cfg.replace(initial=cfg.initial.scaled(s)))
        rows.append(ScalingRow(s, float(rep.K[-1]), float(rep.K_se[-1]), 1.0 + rep.u0_q + rep.u0_mq))
    C = max(r.ratio for r in rows)
    return ScalingStudy(tuple(rows), float(C))
