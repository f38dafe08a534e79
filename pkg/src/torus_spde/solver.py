"""Mild-solution Picard iteration and exponential Euler stepping.

With ``E = S(dt)`` and ``Phi = (-A)^-1 (I - S(dt))`` the discrete mild map
sends a trajectory ``u_prev`` to

.. math:: v_{j+1} = E v_j + \\Phi F(u_{prev}(t_j)) + E \\sigma(u_{prev}(t_j)) \\Delta W_j,
          \\qquad u(t_j) = S(t_j) u_0 + v_j,\\quad v_0 = 0.

``Phi`` integrates piecewise-constant forcing exactly and the noise is
taken at the left point, so ``u(t_j)`` only sees ``dW_0 .. dW_{j-1}``.
All kernels work on batches of paths in the eigen-coordinates of ``-A``.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import signal, special

from .elliptic import DiagonalOperator, default_delta, operator_from_dict
from .model import Model, _drift_coeffs, _diffusion_coeffs, _model_coeffs, gaussian_moment_constant
from .model import growth_and_lipschitz_certify
from .spectral import SpectralField, _derivative_symbol, _lp_norm_coeffs, hermitian_part
from .wiener import WienerPath, sample_wiener_path

__all__ = [
    "ContractionReport",
    "FactorizationReport",
    "LinearOracleReport",
    "PicardResult",
    "SolverConfig",
    "Trajectory",
    "contraction_probe",
    "direct_solve",
    "factorization_check",
    "linear_oracle",
    "mild_step_accumulate",
    "partitioned_solve",
    "picard_solve",
]


# -- configuration and values -------------------------------------------------


@dataclass(frozen=True)
class SolverConfig:
    """Discretisation and model parameters of one solve.

    ``T_partition`` is the sub-interval length used by
    :func:`partitioned_solve` (defaults to ``T``).
    """

    T: float = 1.0
    J: int = 64
    K: int = 8
    p: float = 2.0
    q: float = 4.0
    m: int = 1
    n_max: int = 10
    tol: float = 1e-10
    T_partition: float | None = None
    operator: object = field(default_factory=DiagonalOperator)
    model: Model = field(default_factory=Model)

    def __post_init__(self):
        if self.T_partition is None:
            object.__setattr__(self, "T_partition", self.T)
        if self.p < 2:
            raise ValueError("p must be >= 2")
        if self.q <= 2:
            raise ValueError("q must be > 2")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.T <= 0 or self.J < 1 or self.K < 0 or self.n_max < 1:
            raise ValueError("need T > 0, J >= 1, K >= 0, n_max >= 1")
        if not 0 < self.T_partition <= self.T * (1 + 1e-12):
            raise ValueError("partition length must satisfy 0 < T~ <= T")
        self.model.nonlinearity.check_order(self.operator.order)

    @property
    def dt(self) -> float:
        return self.T / self.J

    @property
    def dimension(self) -> int:
        return self.model.dimension

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.J + 1)

    def replace(self, **changes) -> "SolverConfig":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        if "T" in changes and "T_partition" not in changes and self.T_partition == self.T:
            d["T_partition"] = None
        d.update(changes)
        return SolverConfig(**d)

    def to_dict(self) -> dict:
        return {"T": self.T, "J": self.J, "K": self.K, "p": self.p, "q": self.q, "m": self.m,
                "n_max": self.n_max, "tol": self.tol, "T_partition": self.T_partition,
                "operator": self.operator.to_dict(), "model": self.model.to_dict()}

    @classmethod
    def from_dict(cls, record: dict) -> "SolverConfig":
        rec = dict(record)
        rec["operator"] = operator_from_dict(rec.get("operator", {}))
        rec["model"] = Model.from_dict(rec.get("model", {}))
        return cls(**rec)

    def config_hash(self) -> str:
        try:
            blob = json.dumps(self.to_dict(), sort_keys=True)
        except ValueError:  # custom symbols
            blob = repr(self)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Fields ``u(t_j)`` on the time grid with provenance."""

    times: np.ndarray
    coeffs: np.ndarray
    level: int = 0
    config_hash: str = ""
    path_id: int = 0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        t = np.array(self.times, dtype=float)
        if c.shape[0] != t.shape[0]:
            raise ValueError("one field per grid time required")
        if not np.all(np.isfinite(c)):
            raise ValueError("trajectory contains non-finite coefficients")
        c.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "times", t)

    @property
    def dimension(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def cutoff(self) -> int:
        return (self.coeffs.shape[-1] - 1) // 2

    def __len__(self):
        return len(self.times)

    def field(self, j: int) -> SpectralField:
        return SpectralField(self.coeffs[j])

    @property
    def final(self) -> SpectralField:
        return self.field(-1)

    def lp_norms(self, p: float = 2.0) -> np.ndarray:
        return _lp_norm_coeffs(self.coeffs, self.dimension, p)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.times).tobytes())
        h.update(np.ascontiguousarray(self.coeffs).tobytes())
        return h.hexdigest()


# -- eigen-coordinate propagator ----------------------------------------------


class _Propagator:
    """Exact semigroup pieces of ``op`` for one cutoff, in flat eigen-coordinates."""

    def __init__(self, op, K: int, N: int):
        self.op, self.K, self.N = op, K, N
        self.shape = (2 * K + 1,) * N
        if op.is_diagonal:
            self.lam = op.symbol(K, N).reshape(-1)
            self.V = None
        else:
            self.lam, self.V = op._eig(K)

    def to_eig(self, coeffs: np.ndarray) -> np.ndarray:
        lead = coeffs.shape[: coeffs.ndim - self.N]
        flat = coeffs.reshape(lead + (-1,))
        return flat if self.V is None else flat @ self.V.conj()

    def from_eig(self, w: np.ndarray) -> np.ndarray:
        flat = w if self.V is None else w @ self.V.T
        out = flat.reshape(w.shape[:-1] + self.shape)
        return out if self.V is None else hermitian_part(out, self.N)

    def semigroup(self, t) -> np.ndarray:
        return np.exp(-np.multiply.outer(np.asarray(t, dtype=float), self.lam))

    def phi(self, dt: float) -> np.ndarray:
        # (1 - e^{-dt lam}) / lam, stable for small dt lam
        return -np.expm1(-dt * self.lam) / self.lam


def _mild_map(prop: _Propagator, model: Model, U: np.ndarray, u0: np.ndarray, dW: np.ndarray,
              T: float) -> np.ndarray:
    """Batched discrete mild map; ``U`` has shape ``(P, J+1) + modes``, ``dW`` ``(P, J, d)``."""
    P, J1 = U.shape[:2]
    J = J1 - 1
    dt = T / J
    Fc, Sc = _model_coeffs(model, U[:, :J])
    forcing = prop.to_eig(Fc) * prop.phi(dt)
    if model.diffusion.d:
        noise = np.einsum("pjd,pjdm->pjm", dW, prop.to_eig(Sc))
        forcing = forcing + np.exp(-dt * prop.lam) * noise
    E = np.exp(-dt * prop.lam)
    v = np.zeros((P, J1, prop.lam.size), dtype=complex)
    for j in range(J):
        v[:, j + 1] = E * v[:, j] + forcing[:, j]
    times = np.linspace(0.0, T, J1)
    free = prop.to_eig(u0)[:, None, :] * prop.semigroup(times)[None]
    return prop.from_eig(free + v)


def _h_distance(A: np.ndarray, B: np.ndarray, N: int, p: float, q: float, T: float) -> np.ndarray:
    """``(int_0^T ||A - B||_p^q dt)^(1/q)`` by the trapezoid rule, per path."""
    norms = _lp_norm_coeffs(A - B, N, p)
    t = np.linspace(0.0, T, A.shape[1])
    return np.trapezoid(norms**q, t, axis=-1) ** (1.0 / q)


def _as_coeffs(u0, K: int, N: int) -> np.ndarray:
    if isinstance(u0, SpectralField):
        if u0.dimension != N:
            raise ValueError("initial condition lives on the wrong torus")
        return u0.resize(K).coeffs
    return np.asarray(u0, dtype=complex)


# -- public operations --------------------------------------------------------


def mild_step_accumulate(op, model: Model, path: WienerPath, u_prev: Trajectory,
                         u0: SpectralField) -> Trajectory:
    """One application of the discrete mild map on the grid of ``path``."""
    if len(u_prev) != path.J + 1 or not np.allclose(u_prev.times, path.times, rtol=0, atol=1e-12):
        raise ValueError("trajectory and Wiener path use different time grids")
    if path.d != model.diffusion.d:
        raise ValueError("noise dimension differs from the diffusion spec")
    N, K = u_prev.dimension, u_prev.cutoff
    prop = _Propagator(op, K, N)
    out = _mild_map(prop, model, u_prev.coeffs[None], _as_coeffs(u0, K, N)[None],
                    path.increments[None], path.T)[0]
    return Trajectory(path.times, out, u_prev.level + 1, u_prev.config_hash, path.path_index)


@dataclass
class PicardResult:
    trajectories: list
    deltas: list
    converged: bool
    path_digest: str = ""

    @property
    def final(self) -> Trajectory:
        return self.trajectories[-1]

    @property
    def levels(self) -> int:
        return len(self.deltas)


def _picard_batch(config: SolverConfig, dW: np.ndarray, u0: np.ndarray, *, stop_on_tol: bool = True,
                  observer=None, keep: bool = False):
    """Picard iteration for a batch of paths sharing one configuration.

    ``observer(level, U)`` is called for every level including ``u^0``.
    Returns ``(deltas (P, levels), converged (P,), kept trajectories)``.
    """
    N, K = config.dimension, config.K
    prop = _Propagator(config.operator, K, N)
    P = dW.shape[0]
    U = np.broadcast_to(u0[:, None], (P, config.J + 1) + u0.shape[1:]).copy()
    kept = [U] if keep else []
    if observer:
        observer(0, U)
    deltas = []
    for n in range(1, config.n_max + 1):
        new = _mild_map(prop, config.model, U, u0, dW, config.T)
        deltas.append(_h_distance(new, U, N, config.p, config.q, config.T))
        U = new
        if keep:
            kept.append(U)
        if observer:
            observer(n, U)
        if stop_on_tol and np.all(deltas[-1] < config.tol):
            break
    D = np.stack(deltas, axis=1)
    return D, D[:, -1] < config.tol, kept


def picard_solve(config: SolverConfig, path: WienerPath, u0: SpectralField, *,
                 stop_on_tol: bool = True) -> PicardResult:
    """Picard iterates ``u^0 = u0, u^1, ...`` driven by one shared path."""
    if path.J != config.J or abs(path.T - config.T) > 1e-12 * config.T:
        raise ValueError("Wiener path grid does not match the configuration")
    if path.d != config.model.diffusion.d:
        raise ValueError("noise dimension differs from the diffusion spec")
    c0 = _as_coeffs(u0, config.K, config.dimension)
    D, conv, kept = _picard_batch(config, path.increments[None], c0[None], stop_on_tol=stop_on_tol,
                                  keep=True)
    h = config.config_hash()
    trajs = [Trajectory(config.times, U[0], n, h, path.path_index) for n, U in enumerate(kept)]
    converged = bool(conv[0])
    if not converged:
        warnings.warn(f"Picard iteration did not reach tol={config.tol} in {config.n_max} levels "
                      f"(last delta {D[0, -1]:.3e}, path {path.path_index})", RuntimeWarning, stacklevel=2)
    return PicardResult(trajs, D[0].tolist(), converged, path.digest())


def direct_solve(config: SolverConfig, path: WienerPath, u0: SpectralField) -> Trajectory:
    """Single pass of the exponential Euler scheme (the Picard fixed point)."""
    return Trajectory(config.times, _direct_batch(config, path.increments[None],
                                                  _as_coeffs(u0, config.K, config.dimension)[None])[0],
                      -1, config.config_hash(), path.path_index)


def _direct_batch(config: SolverConfig, dW: np.ndarray, u0: np.ndarray) -> np.ndarray:
    N, K, J = config.dimension, config.K, dW.shape[1]
    prop = _Propagator(config.operator, K, N)
    dt = config.T / J
    E, phi = np.exp(-dt * prop.lam), prop.phi(dt)
    P = dW.shape[0]
    out = np.empty((P, J + 1) + u0.shape[1:], dtype=complex)
    out[:, 0] = u0
    w = prop.to_eig(u0)
    model = config.model
    for j in range(J):
        Fc, Sc = _model_coeffs(model, out[:, j])
        step = E * w + phi * prop.to_eig(Fc)
        if model.diffusion.d:
            step = step + E * np.einsum("pd,pdm->pm", dW[:, j], prop.to_eig(Sc))
        w = step
        out[:, j + 1] = prop.from_eig(w)
    return out


@dataclass(frozen=True)
class ContractionReport:
    measured_rate: float
    predicted: float
    delta: float
    constant: float
    degenerate: bool = False
    ratios: tuple = ()


def contraction_constant(config: SolverConfig) -> float:
    """Constant ``C`` in the predicted rate ``C (T^(1-delta) + T^(1/2))``.

    ``C = max(C_F, C_sigma)`` where ``C_F`` combines the sharp smoothing
    constant ``(delta/e)^delta / (1 - delta)`` with the per-term multiplier
    bounds ``sup_k |(2 pi k)^alpha| lambda(k)^-delta`` and certified
    Lipschitz constants, and ``C_sigma = C_q * Lip(sigma)``.
    """
    op, model = config.operator, config.model
    delta = default_delta(op.order)
    K, N = config.K, config.dimension
    if op.is_diagonal:
        lam = op.symbol(K, N)
    else:
        lam = op.eigenvalues(K)
    lam_min = float(np.min(lam))
    smooth = (delta / math.e) ** delta / (1 - delta)
    cF = 0.0
    for t in model.nonlinearity.terms:
        if t.coefficient == 0:
            continue
        lip = t.function.derivative_bound(1)
        if op.is_diagonal:
            mult = float(np.max(np.abs(_derivative_symbol(K, t.alpha)) * lam ** (-delta)))
        else:
            mult = (2 * math.pi * K) ** t.order * lam_min ** (-delta)
        cF += abs(t.coefficient) * lip * mult
    cF *= smooth
    cS = 0.0
    if model.diffusion.d:
        cS = gaussian_moment_constant(config.q) * growth_and_lipschitz_certify(model.diffusion).C_lip
    return max(cF, cS)


def contraction_probe(config: SolverConfig, paths, u0: SpectralField, *, floor: float = 1e-12) -> ContractionReport:
    """Largest observed ratio ``delta_{n+1} / delta_n`` over the given paths.

    Ratios whose denominator is below ``floor * delta_1`` are skipped (the
    iteration has already hit rounding level); if no ratio survives the
    report is flagged ``degenerate`` with rate 0.
    """
    if config.n_max < 2:
        raise ValueError("need at least two Picard levels")
    paths = list(paths)
    dW = np.stack([p.increments for p in paths])
    c0 = _as_coeffs(u0, config.K, config.dimension)
    D, _, _ = _picard_batch(config, dW, np.broadcast_to(c0, (len(paths),) + c0.shape).copy(),
                            stop_on_tol=False)
    ratios = []
    for row in D:
        ref = row[0]
        for a, b in zip(row[:-1], row[1:]):
            if ref > 0 and a > floor * ref:
                ratios.append(b / a)
    delta = default_delta(config.operator.order)
    C = contraction_constant(config)
    predicted = C * (config.T ** (1 - delta) + config.T**0.5)
    if not ratios:
        return ContractionReport(0.0, predicted, delta, C, True, ())
    return ContractionReport(float(max(ratios)), predicted, delta, C, False, tuple(ratios))


def partitioned_solve(config: SolverConfig, path: WienerPath, u0: SpectralField) -> Trajectory:
    """Solve on consecutive intervals of length ``T_partition`` and concatenate."""
    steps = config.T_partition / config.dt
    if abs(steps - round(steps)) > 1e-9:
        raise ValueError("partition length must be a whole number of time steps")
    steps = int(round(steps))
    if path.J != config.J:
        raise ValueError("Wiener path grid does not match the configuration")
    pieces = []
    start = u0.resize(config.K)
    j0 = 0
    while j0 < config.J:
        j1 = min(j0 + steps, config.J)
        sub = config.replace(T=(j1 - j0) * config.dt, J=j1 - j0, T_partition=None)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = picard_solve(sub, path.window(j0, j1), start)
        if not res.converged:
            raise RuntimeError(f"sub-interval [{j0 * config.dt:.4g}, {j1 * config.dt:.4g}] did not "
                               f"converge (last delta {res.deltas[-1]:.3e})")
        traj = res.final
        pieces.append(traj.coeffs if not pieces else traj.coeffs[1:])
        start = traj.final
        j0 = j1
    return Trajectory(config.times, np.concatenate(pieces), -1, config.config_hash(), path.path_index)


# -- factorization identity -----------------------------------------------------


@dataclass(frozen=True)
class FactorizationReport:
    """Both sides at the last requested time and the relative error over all of them."""

    direct: SpectralField
    factorized: SpectralField
    rel_err: float
    times: tuple = ()


def factorization_check(op, model: Model, path: WienerPath, alpha: float, t=None, *,
                        trajectory: Trajectory | None = None, cutoff: int = 8,
                        deterministic: bool = False) -> FactorizationReport:
    """Compare the stochastic convolution with its factorised form.

    ``direct``: ``sum_j [cell average of S(t - r)] sigma_j dW_j``.
    ``factorized``: ``1/Gamma(alpha) int (t-s)^(alpha-1) S(t-s) y(s) ds`` with
    ``y(s) = 1/Gamma(1-alpha) int_0^s (s-r)^-alpha S(s-r) sigma dW(r)``,
    ``y`` taken at cell midpoints and both singular kernels integrated
    exactly over cells through regularised incomplete gamma functions.

    ``t`` is a grid time or a sequence of grid times (default ``T``); the
    relative error is the Euclidean norm of the difference over all modes
    and requested times divided by that of ``direct``. ``sigma_j`` is
    ``sigma(u(t_j))`` along ``trajectory`` (default ``u = 0``). With
    ``deterministic=True`` every increment is replaced by ``dt``.
    """
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    dt = path.dt
    ts = np.atleast_1d(np.asarray(path.T if t is None else t, dtype=float))
    idx = np.rint(ts / dt).astype(int)
    if np.any(idx < 1) or np.any(idx > path.J) or np.any(np.abs(idx * dt - ts) > 1e-9 * max(path.T, 1.0)):
        raise ValueError("t must consist of positive grid times")
    n = int(idx.max())
    N = model.dimension
    K = trajectory.cutoff if trajectory is not None else cutoff
    if model.diffusion.d == 0:
        z = SpectralField.zeros(N, K)
        return FactorizationReport(z, z, 0.0, tuple(ts))
    prop = _Propagator(op, K, N)
    lam = prop.lam
    if trajectory is None:
        U = np.zeros((n,) + (2 * K + 1,) * N, dtype=complex)
    else:
        U = np.asarray(trajectory.coeffs[:n])
    sig = prop.to_eig(_diffusion_coeffs(model.diffusion, U))  # (n, d, M)
    dW = np.full((n, model.diffusion.d), dt) if deterministic else path.increments[:n]
    b = np.einsum("jd,jdm->mj", dW, sig)  # forcing per cell, (M, n)
    lags = np.arange(1, n + 1)

    def causal(kernel):
        # out[:, i] = sum_{j < i} kernel[:, i - j - 1] b-like[:, j], for i = 1..n
        return lambda x: signal.fftconvolve(x, kernel, axes=-1)[:, :n]

    # direct at t_i: cell-averaged kernel, lag L = i - j >= 1
    cell = -np.expm1(-dt * lam) / (lam * dt)
    direct = causal(cell[:, None] * np.exp(-np.multiply.outer(lam, (lags - 1) * dt)))(b)

    # inner kernel: Phi_in(U) / Gamma(1-a) = lam^(a-1) P(1-a, lam U), U = s - r
    def phi_in(u):
        return lam[:, None] ** (alpha - 1) * special.gammainc(1 - alpha, np.multiply.outer(lam, u))

    w_prev = phi_in((lags[:-1] + 0.5) * dt) - phi_in((lags[:-1] - 0.5) * dt)
    w_self = phi_in(np.array([0.5 * dt]))[:, 0]
    y = w_self[:, None] * b / dt
    if n > 1:
        y[:, 1:] += causal(w_prev)(b)[:, : n - 1] / dt

    # outer kernel: Phi_out(U) / Gamma(a) = lam^-a P(a, lam U), U = t - s
    def phi_out(u):
        return lam[:, None] ** (-alpha) * special.gammainc(alpha, np.multiply.outer(lam, u))

    fact = causal(phi_out(lags * dt) - phi_out((lags - 1) * dt))(y)
    sel = idx - 1
    diff = np.linalg.norm(direct[:, sel] - fact[:, sel])
    scale = float(np.linalg.norm(direct[:, sel]))
    err = float(diff) / scale if scale > 0 else float(np.linalg.norm(fact[:, sel]))
    last = int(np.argmax(idx))
    d_field = SpectralField(prop.from_eig(direct[:, sel[last]]))
    f_field = SpectralField(prop.from_eig(fact[:, sel[last]]))
    return FactorizationReport(d_field, f_field, err, tuple(ts))


# -- linear oracle ----------------------------------------------------------------


@dataclass(frozen=True)
class LinearOracleReport:
    wavevectors: tuple
    eigenvalues: np.ndarray
    variance: np.ndarray
    std_error: np.ndarray
    exact: np.ndarray
    strong_errors: np.ndarray
    strong_steps: np.ndarray
    strong_order: float

    @property
    def z_scores(self) -> np.ndarray:
        return (self.variance - self.exact) / self.std_error


def _noise_weight(model: Model, K: int) -> np.ndarray:
    """``sum_i |g_i(k)|^2`` for diffusion constant in ``xi``."""
    N = model.dimension
    out = np.zeros((2 * K + 1,) * N)
    for s in model.diffusion.functions:
        h0 = float(s.h(np.array([0.0]))[0])
        if s.h.derivative_bound(1) != 0:
            raise ValueError("linear oracle needs diffusion independent of the solution")
        out += np.abs(s.g.resize(K).coeffs * h0) ** 2
    return out


def linear_oracle(config: SolverConfig, n_paths: int, seed: int = 0, *, chunk: int = 500,
                  strong_paths: int = 200, strong_levels: int = 4) -> LinearOracleReport:
    """Per-mode variance at ``T`` against the Ito-isometry value, and strong order.

    Requires a diagonal operator, ``F = 0`` and ``sigma`` independent of the
    solution; ``u0 = 0``. Exact per-mode value:
    ``sum_i |g_i(k)|^2 (1 - exp(-2 lam T)) / (2 lam)``. The strong order is
    the slope of ``sqrt(E|u_J(T) - u_{2J}(T)|^2)`` over coupled refinements
    (NaN with fewer than two refinement pairs or an exactly zero error).
    """
    op, model = config.operator, config.model
    if not op.is_diagonal:
        raise ValueError("linear oracle needs a diagonal operator")
    if any(t.coefficient for t in model.nonlinearity.terms):
        raise ValueError("linear oracle needs F = 0")
    N, K = config.dimension, config.K
    weight = _noise_weight(model, K)
    lam = op.symbol(K, N)
    exact = weight * -np.expm1(-2 * lam * config.T) / (2 * lam)
    u0 = np.zeros((2 * K + 1,) * N, dtype=complex)
    d = model.diffusion.d

    # non-negative wavevectors (one per conjugate pair)
    idx = [k for k in np.ndindex(*lam.shape) if tuple(np.array(k) - K) >= (0,) * N]
    samples = []
    for start in range(0, n_paths, chunk):
        ids = range(start, min(start + chunk, n_paths))
        dW = np.stack([sample_wiener_path(d, config.T, config.J, seed, i).increments for i in ids])
        fin = _final_states(config, dW, u0)
        samples.append(np.stack([np.abs(fin[(slice(None),) + k]) ** 2 for k in idx], axis=1))
    S = np.concatenate(samples)
    var = S.mean(axis=0)
    se = S.std(axis=0, ddof=1) / math.sqrt(S.shape[0])

    # strong order from coupled refinements J, 2J, ... on the same paths
    finals = []
    Js = [config.J * 2**r for r in range(strong_levels + 1)]
    for Jr in Js:
        dW = np.stack([sample_wiener_path(d, config.T, Jr, seed + 1, i).increments for i in range(strong_paths)])
        finals.append(_final_states(config.replace(J=Jr), dW, u0))
    errs = np.array([math.sqrt(np.mean(np.sum(np.abs(a - b) ** 2, axis=tuple(range(1, N + 1)))))
                     for a, b in zip(finals[:-1], finals[1:])])
    steps = np.array([config.T / Jr for Jr in Js[:-1]])
    if len(errs) >= 2 and np.all(errs > 0):
        order = float(np.polyfit(np.log(steps), np.log(errs), 1)[0])
    else:
        order = float("nan")
    wv = tuple(tuple(int(x) for x in np.array(k) - K) for k in idx)
    return LinearOracleReport(wv, np.array([lam[k] for k in idx]), var, se,
                              np.array([exact[k] for k in idx]), errs, steps, order)


def _final_states(config: SolverConfig, dW: np.ndarray, u0: np.ndarray) -> np.ndarray:
    """``u(T)`` for additive noise without storing the trajectory."""
    prop = _Propagator(config.operator, config.K, config.dimension)
    J = dW.shape[1]
    dt = config.T / J
    E = np.exp(-dt * prop.lam)
    _, Sc = _model_coeffs(config.model, u0[None])
    sig = prop.to_eig(Sc[0])  # (d, M)
    noise = dW @ sig  # (P, J, M)
    powers = np.exp(-np.multiply.outer((J - np.arange(J)) * dt, prop.lam))  # E^{J-j}
    w = np.einsum("pjm,jm->pm", noise, powers)
    w = w + prop.to_eig(u0)[None] * np.exp(-config.T * prop.lam)
    return prop.from_eig(w)


def drift_only(config: SolverConfig, u: SpectralField) -> SpectralField:
    """``F(u)`` under the configured model (convenience for scripts)."""
    return SpectralField(_drift_coeffs(config.model.nonlinearity, u.resize(config.K).coeffs))
