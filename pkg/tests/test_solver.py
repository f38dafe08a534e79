import math
import warnings

import numpy as np
import pytest

from torus_spde.elliptic import DiagonalOperator, apply_semigroup
from torus_spde.functions import Affine, SeparableFunction, TanhScaled
from torus_spde.model import DiffusionSpec, Model, NonlinearitySpec, Term
from torus_spde.solver import (SolverConfig, Trajectory, contraction_probe, direct_solve, factorization_check,
                               linear_oracle, mild_step_accumulate, partitioned_solve, picard_solve)
from torus_spde.spectral import SpectralField, lp_norm, random_field
from torus_spde.suites import contraction_config, linear_oracle_config
from torus_spde.wiener import sample_wiener_path

TWO_PI = 2 * np.pi
UNIT = DiagonalOperator(symbol_fn=lambda k: np.ones(k.shape[:-1]))


def sin_field(K=8, a=0.5):
    return SpectralField.from_function(lambda x: a * np.sin(TWO_PI * x), 1, K)


def constant_noise(value=1.0):
    return DiffusionSpec((SeparableFunction.constant(value, 1),))


def solve_quiet(*args, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return picard_solve(*args, **kw)


# -- mild map -------------------------------------------------------------------


def test_pure_semigroup_flow(rng):
    cfg = SolverConfig(T=0.5, J=32, K=6, n_max=3)
    u0 = random_field(rng, 1, 6)
    path = sample_wiener_path(0, cfg.T, cfg.J)
    res = picard_solve(cfg, path, u0)
    traj = res.final
    for j in (0, 7, 32):
        want = apply_semigroup(cfg.operator, traj.times[j], u0)
        np.testing.assert_allclose(traj.coeffs[j], want.coeffs, rtol=0, atol=1e-15)


def test_constant_forcing_exact():
    # lambda = 1, F = c, u0 = 0: u(t) = c (1 - e^-t)
    c = 0.8
    model = Model(NonlinearitySpec((Term(1.0, (0,), Affine(0.0, c)),)))
    cfg = SolverConfig(T=2.0, J=16, K=3, n_max=2, operator=UNIT, model=model)
    res = picard_solve(cfg, sample_wiener_path(0, 2.0, 16), SpectralField.zeros(1, 3))
    u = res.final.coeffs[:, 3]
    np.testing.assert_allclose(u.real, c * (1 - np.exp(-cfg.times)), rtol=0, atol=1e-10)
    assert np.max(np.abs(np.delete(res.final.coeffs, 3, axis=1))) == 0


def test_ou_variance_bookkeeping():
    # additive noise: u(T) = sum_j S(T - t_j) sigma dW_j, so the unit-impulse
    # response of step j is exp(-lam (T - t_j)) and Var u_k(T) = sum_j exp(-2 lam (T - t_j)) dt
    T, J = 1.0, 20
    cfg = SolverConfig(T=T, J=J, K=2, n_max=2, model=Model(diffusion=constant_noise()))
    lam0 = cfg.operator.symbol(2, 1)[2]
    path = sample_wiener_path(1, T, J)
    zero = SpectralField.zeros(1, 2)
    resp = np.empty(J)
    for j in range(J):
        e = np.zeros((J, 1))
        e[j] = 1.0
        resp[j] = picard_solve(cfg, path.with_increments(e), zero).final.coeffs[-1, 2].real
    t = cfg.times
    np.testing.assert_allclose(resp, np.exp(-lam0 * (T - t[:-1])), rtol=1e-13)
    var = np.sum(resp**2) * cfg.dt
    want = np.sum(np.exp(-2 * lam0 * (T - t[:-1]))) * cfg.dt
    assert var == pytest.approx(want, rel=1e-13)
    # and the sample variance agrees with the bookkeeping value
    finals = np.array([direct_solve(cfg, sample_wiener_path(1, T, J, 4, i), zero).coeffs[-1, 2].real
                       for i in range(4000)])
    se = want * math.sqrt(2 / (len(finals) - 1))
    assert abs(finals.var(ddof=1) - want) <= 4 * se


def test_mild_step_matches_picard_level(rng):
    cfg = contraction_config()
    path = sample_wiener_path(1, cfg.T, cfg.J, 2, 0)
    u0 = sin_field(cfg.K)
    res = solve_quiet(cfg, path, u0, stop_on_tol=False)
    nxt = mild_step_accumulate(cfg.operator, cfg.model, path, res.trajectories[2], u0)
    np.testing.assert_array_equal(nxt.coeffs, res.trajectories[3].coeffs)
    assert nxt.level == 3


def test_mild_step_grid_mismatch():
    cfg = SolverConfig(T=1.0, J=8, K=2)
    traj = Trajectory(np.linspace(0, 1, 5), np.zeros((5, 5), dtype=complex))
    with pytest.raises(ValueError):
        mild_step_accumulate(cfg.operator, cfg.model, sample_wiener_path(0, 1.0, 8), traj,
                             SpectralField.zeros(1, 2))


# -- Picard iteration -------------------------------------------------------------


def test_picard_no_feedback():
    cfg = SolverConfig(T=1.0, J=16, K=4, n_max=4, tol=1e-14)
    res = picard_solve(cfg, sample_wiener_path(0, 1.0, 16), sin_field(4))
    assert res.deltas[1] == 0.0
    assert res.converged and res.levels == 2
    np.testing.assert_array_equal(res.trajectories[0].coeffs[5], sin_field(4).coeffs)


def test_picard_linear_geometric_decay():
    # F(u) = -c u, sigma = 0: Picard errors shrink at least by c T per level
    c, T = 2.0, 0.1
    model = Model(NonlinearitySpec((Term(-c, (0,), Affine()),)))
    cfg = SolverConfig(T=T, J=64, K=4, n_max=6, tol=0.0, model=model)
    res = solve_quiet(cfg, sample_wiener_path(0, T, 64), sin_field(4), stop_on_tol=False)
    d = np.array(res.deltas)
    ratios = d[1:] / d[:-1]
    assert np.all(ratios <= c * T)


def test_doubling_tol_needs_no_more_levels():
    cfg = contraction_config().replace(n_max=30)
    u0 = sin_field(cfg.K)
    for i in range(3):
        path = sample_wiener_path(1, cfg.T, cfg.J, 17, i)
        for tol in (1e-6, 1e-8, 1e-10):
            a = solve_quiet(cfg.replace(tol=tol), path, u0).levels
            b = solve_quiet(cfg.replace(tol=2 * tol), path, u0).levels
            assert b <= a


def test_nonconvergence_warns():
    cfg = contraction_config().replace(n_max=2, tol=1e-30)
    path = sample_wiener_path(1, cfg.T, cfg.J)
    with pytest.warns(RuntimeWarning, match="did not reach"):
        res = picard_solve(cfg, path, sin_field(cfg.K))
    assert not res.converged


def test_shared_path_across_levels():
    cfg = contraction_config()
    path = sample_wiener_path(1, cfg.T, cfg.J, 1, 3)
    res = solve_quiet(cfg, path, sin_field(cfg.K))
    assert res.path_digest == path.digest()
    assert {t.path_id for t in res.trajectories} == {3}
    assert {t.config_hash for t in res.trajectories} == {cfg.config_hash()}


def test_monotone_deltas():
    cfg = contraction_config()
    u0 = sin_field(cfg.K)
    for i in range(5):
        res = solve_quiet(cfg, sample_wiener_path(1, cfg.T, cfg.J, 17, i), u0, stop_on_tol=False)
        d = np.array(res.deltas)
        live = d[1:][d[:-1] > 1e-12 * d[0]]
        prev = d[:-1][d[:-1] > 1e-12 * d[0]]
        assert np.all(live[1:] <= prev[1:])


def test_adaptedness():
    cfg = contraction_config()
    path = sample_wiener_path(1, cfg.T, cfg.J, 6, 0)
    inc = path.increments
    j0 = 100
    pert = inc.copy()
    pert[j0:] += np.random.default_rng(0).normal(size=pert[j0:].shape)
    u0 = sin_field(cfg.K)
    a = solve_quiet(cfg, path.with_increments(inc), u0, stop_on_tol=False)
    b = solve_quiet(cfg, path.with_increments(pert), u0, stop_on_tol=False)
    for ta, tb in zip(a.trajectories, b.trajectories):
        # u(t_j) only sees dW_0 .. dW_{j-1}
        assert np.array_equal(ta.coeffs[: j0 + 1], tb.coeffs[: j0 + 1])
    assert not np.array_equal(a.final.coeffs[j0 + 1], b.final.coeffs[j0 + 1])


def test_direct_matches_picard_limit():
    cfg = contraction_config().replace(n_max=40, tol=1e-13)
    path = sample_wiener_path(1, cfg.T, cfg.J, 8, 1)
    u0 = sin_field(cfg.K)
    res = picard_solve(cfg, path, u0)
    assert res.converged
    np.testing.assert_allclose(direct_solve(cfg, path, u0).coeffs, res.final.coeffs, rtol=0, atol=1e-11)


def test_mean_square_continuity():
    cfg = contraction_config()
    u0 = sin_field(cfg.K)
    trajs = [direct_solve(cfg, sample_wiener_path(1, cfg.T, cfg.J, 12, i), u0).coeffs for i in range(20)]
    U = np.stack(trajs)
    ms = []
    for h in (64, 16, 4, 1):
        d = U[:, h:] - U[:, :-h]
        ms.append(np.mean(np.sum(np.abs(d) ** 2, axis=-1)))
    assert all(b < a for a, b in zip(ms[:-1], ms[1:]))


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(p=1.5)
    with pytest.raises(ValueError):
        SolverConfig(q=2.0)
    with pytest.raises(ValueError):
        SolverConfig(m=0)
    with pytest.raises(ValueError):
        SolverConfig(T=1.0, T_partition=2.0)
    bad = Model(NonlinearitySpec((Term(1.0, (2,), TanhScaled()),)))
    with pytest.raises(ValueError):
        SolverConfig(model=bad)


def test_solver_config_round_trip():
    cfg = contraction_config()
    back = SolverConfig.from_dict(cfg.to_dict())
    assert back.config_hash() == cfg.config_hash()
    assert cfg.replace(J=512).config_hash() != cfg.config_hash()


def test_grid_mismatch():
    cfg = SolverConfig(T=1.0, J=8, K=2)
    with pytest.raises(ValueError):
        picard_solve(cfg, sample_wiener_path(0, 1.0, 16), SpectralField.zeros(1, 2))
    with pytest.raises(ValueError):
        picard_solve(cfg, sample_wiener_path(1, 1.0, 8), SpectralField.zeros(1, 2))


# -- contraction --------------------------------------------------------------------


def test_contraction_l1_prediction():
    cfg = contraction_config()
    paths = [sample_wiener_path(1, cfg.T, cfg.J, 17, i) for i in range(2)]
    rep = contraction_probe(cfg, paths, sin_field(cfg.K))
    assert rep.delta == 0.5
    assert rep.predicted == pytest.approx(rep.constant * 2 * math.sqrt(cfg.T), rel=1e-14)
    assert rep.measured_rate < 1


def test_contraction_no_feedback_rate_zero():
    cfg = SolverConfig(T=0.2, J=32, K=4, n_max=4, tol=0.0)
    rep = contraction_probe(cfg, [sample_wiener_path(0, 0.2, 32)], sin_field(4))
    assert rep.measured_rate == 0.0 and not rep.degenerate


def test_contraction_all_zero_deltas_degenerate():
    cfg = SolverConfig(T=0.2, J=32, K=4, n_max=4, tol=0.0)
    rep = contraction_probe(cfg, [sample_wiener_path(0, 0.2, 32)], SpectralField.zeros(1, 4))
    assert rep.degenerate and rep.measured_rate == 0.0 and rep.ratios == ()


def test_contraction_needs_two_levels():
    cfg = contraction_config().replace(n_max=1)
    with pytest.raises(ValueError):
        contraction_probe(cfg, [sample_wiener_path(1, cfg.T, cfg.J)], sin_field(cfg.K))


def test_contraction_shorter_horizon():
    cfg = contraction_config()
    u0 = sin_field(cfg.K)
    rates = []
    for T in (cfg.T, cfg.T / 4):
        c = cfg.replace(T=T)
        rates.append(contraction_probe(c, [sample_wiener_path(1, T, c.J, 17, i) for i in range(4)], u0).measured_rate)
    assert rates[1] <= 0.75 * rates[0]


# -- partitioned solve ----------------------------------------------------------------


def test_partitioned_linear_exact(rng):
    cfg = SolverConfig(T=1.0, J=40, K=5, n_max=3, T_partition=0.25)
    u0 = random_field(rng, 1, 5)
    traj = partitioned_solve(cfg, sample_wiener_path(0, 1.0, 40), u0)
    for j in range(0, 41, 5):
        want = apply_semigroup(cfg.operator, traj.times[j], u0)
        np.testing.assert_allclose(traj.coeffs[j], want.coeffs, rtol=0, atol=1e-14)


def test_single_partition_is_picard():
    cfg = contraction_config().replace(n_max=30, tol=1e-12)
    path = sample_wiener_path(1, cfg.T, cfg.J, 2, 0)
    u0 = sin_field(cfg.K)
    a = partitioned_solve(cfg, path, u0)
    b = picard_solve(cfg, path, u0).final
    np.testing.assert_array_equal(a.coeffs, b.coeffs)


def test_two_partitions_agree():
    cfg = contraction_config().replace(n_max=30, tol=1e-12, J=128)
    path = sample_wiener_path(1, cfg.T, 256, 2, 0)
    u0 = sin_field(cfg.K)
    one = picard_solve(cfg, path.coarsen(2), u0).final
    two = partitioned_solve(cfg.replace(T_partition=cfg.T / 2), path.coarsen(2), u0)
    fine = picard_solve(cfg.replace(J=256), path, u0).final
    refine_err = max(lp_norm(SpectralField(one.coeffs[j] - fine.coeffs[2 * j]), 2) for j in range(129))
    part_err = max(lp_norm(SpectralField(one.coeffs[j] - two.coeffs[j]), 2) for j in range(129))
    assert part_err <= 10 * refine_err
    assert part_err < 1e-9


def test_partition_must_hit_grid():
    cfg = SolverConfig(T=1.0, J=10, K=2, T_partition=0.33)
    with pytest.raises(ValueError):
        partitioned_solve(cfg, sample_wiener_path(0, 1.0, 10), SpectralField.zeros(1, 2))


# -- factorization ----------------------------------------------------------------------


def test_factorization_zero_noise():
    path = sample_wiener_path(0, 1.0, 64)
    rep = factorization_check(DiagonalOperator(), Model(), path, 0.3)
    assert rep.rel_err == 0.0
    assert np.all(rep.direct.coeffs == 0) and np.all(rep.factorized.coeffs == 0)


def test_factorization_deterministic_closed_form():
    # dW -> ds, sigma = 1: both sides equal int_0^t e^{-lam (t-s)} ds = (1 - e^{-lam t}) / lam
    path = sample_wiener_path(1, 1.0, 1024, 0, 0)
    rep = factorization_check(DiagonalOperator(), Model(diffusion=constant_noise()), path, 0.3,
                              deterministic=True, cutoff=4)
    lam0 = DiagonalOperator().symbol(4, 1)[4]
    closed = (1 - math.exp(-lam0)) / lam0
    assert rep.direct.coeffs[4].real == pytest.approx(closed, rel=1e-12)
    assert abs(rep.factorized.coeffs[4].real - closed) <= 1e-4 * closed
    assert rep.rel_err <= 1e-4


@pytest.mark.parametrize("alpha", [0.0, 0.5, -0.1, 0.7])
def test_factorization_alpha_range(alpha):
    with pytest.raises(ValueError):
        factorization_check(DiagonalOperator(), Model(diffusion=constant_noise()),
                            sample_wiener_path(1, 1.0, 8), alpha)


def test_factorization_refinement():
    model = Model(diffusion=DiffusionSpec((SeparableFunction(
        SpectralField.from_modes({0: 1.0, 1: 0.5}, 1, 2), Affine(0.0, 1.0)),)))
    for seed in (3, 4):
        errs = []
        for J in (128, 256, 512):
            path = sample_wiener_path(1, 1.0, J, seed, 0)
            errs.append(factorization_check(DiagonalOperator(), model, path, 0.3,
                                            path.times[J // 2 + 1:], cutoff=2).rel_err)
        assert errs[1] < errs[0] and errs[2] < errs[1]


def test_factorization_along_trajectory():
    cfg = contraction_config()
    path = sample_wiener_path(1, cfg.T, cfg.J, 1, 0)
    traj = direct_solve(cfg, path, sin_field(cfg.K))
    rep = factorization_check(cfg.operator, cfg.model, path, 0.3, trajectory=traj)
    assert rep.direct.cutoff == cfg.K
    assert rep.rel_err < 0.1


# -- linear oracle --------------------------------------------------------------------------


def test_linear_oracle_small():
    cfg = linear_oracle_config(T=4.0, J=256)
    rep = linear_oracle(cfg, 600, seed=1, strong_paths=50, strong_levels=3)
    assert len(rep.wavevectors) == 8
    assert rep.eigenvalues[0] == pytest.approx(1.0)
    np.testing.assert_allclose(rep.exact, -np.expm1(-2 * rep.eigenvalues * 4.0) / (2 * rep.eigenvalues))
    assert np.all(np.abs(rep.z_scores) <= 4)
    assert rep.strong_order >= 0.9


def test_linear_oracle_large_horizon_mode_zero():
    rep = linear_oracle(linear_oracle_config(T=20.0, J=256), 10, strong_paths=4, strong_levels=1)
    assert rep.exact[0] == pytest.approx(0.5, abs=1e-15)


def test_linear_oracle_zero_noise():
    zero = DiffusionSpec((SeparableFunction.constant(0.0, 1),))
    cfg = SolverConfig(T=1.0, J=32, K=3, model=Model(diffusion=zero))
    rep = linear_oracle(cfg, 20, strong_paths=4, strong_levels=1)
    assert np.all(rep.variance == 0) and np.all(rep.exact == 0)
    assert math.isnan(rep.strong_order)


def test_linear_oracle_rejects_nonlinear():
    with pytest.raises(ValueError):
        linear_oracle(contraction_config(), 10)
