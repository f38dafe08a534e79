import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import chain_rule_constant_total, chain_rule_constants, fd_mixed_derivative, grid_holder_quotient
from torus_spde.analysis import (chain_rule_eval, chain_rule_grid, composite_sobolev_norm, embedding_ratio,
                                 endpoint_maximum_check, faa_di_bruno_terms, first_order_check, holder_norm,
                                 interpolation_check, moser_check, moser_check_x_dependent)
from torus_spde.baselines import load_baselines
from torus_spde.functions import Affine, AtanScaled, PolynomialClamped, SeparableFunction, Sine, TanhScaled
from torus_spde.spectral import GridField, SpectralField, forward_transform, derivative, random_field, sobolev_norm
from torus_spde.suites import chain_rule_suite

TWO_PI = 2 * np.pi


def sin1(K=2):
    return SpectralField.from_function(lambda x: np.sin(TWO_PI * x), 1, K)


def _table(terms):
    return {(t.order, tuple(sorted((sum(a) for a in t.parts), reverse=True))): t.constant for t in terms}


def test_faa_di_bruno_examples():
    t1 = faa_di_bruno_terms((1,))
    assert len(t1) == 1 and t1[0].order == 1 and t1[0].parts == ((1,),) and t1[0].constant == 1
    assert _table(faa_di_bruno_terms((2,))) == {(2, (1, 1)): 1, (1, (2,)): 1}
    assert _table(faa_di_bruno_terms((3,))) == {(3, (1, 1, 1)): 1, (2, (2, 1)): 3, (1, (3,)): 1}


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_faa_di_bruno_matches_symbolic(n):
    assert _table(faa_di_bruno_terms((n,))) == chain_rule_constants(n)
    assert sum(t.constant for t in faa_di_bruno_terms((n,))) == chain_rule_constant_total(n)


@pytest.mark.parametrize("gamma", [(1, 1), (2, 1), (1, 3), (2, 2), (0, 3)])
def test_multivariate_totals_are_bell_numbers(gamma):
    terms = faa_di_bruno_terms(gamma)
    assert sum(t.constant for t in terms) == chain_rule_constant_total(sum(gamma))
    for t in terms:
        assert tuple(map(sum, zip(*t.parts))) == gamma
        assert all(sum(a) >= 1 for a in t.parts) and 1 <= t.order <= sum(gamma)
        assert len(t.parts) == t.order


def test_faa_di_bruno_rejects_zero():
    with pytest.raises(ValueError):
        faa_di_bruno_terms((0, 0))


def test_chain_rule_identity(rng):
    f = random_field(rng, 2, 3)
    got = chain_rule_eval(Affine(), f, (1, 2))
    assert got.allclose(derivative(f, (1, 2)), atol=1e-10 * np.max(np.abs(derivative(f, (1, 2)).coeffs)))


def test_chain_rule_square():
    sq = PolynomialClamped((0.0, 0.0, 1.0), radius=2.0, width=1.0, order=3)
    got = chain_rule_eval(sq, sin1(), (2,), cutoff=3)
    want = SpectralField.from_function(lambda x: 2 * TWO_PI**2 * np.cos(4 * np.pi * x), 1, 3)
    assert got.allclose(want, atol=1e-10)


def test_chain_rule_order_certified():
    with pytest.raises(ValueError):
        chain_rule_eval(TanhScaled(1.0, order=2), sin1(), (3,))


@pytest.mark.parametrize("i", range(0, 50, 7))
def test_chain_rule_finite_difference(i):
    case = chain_rule_suite()[i]
    G, f, gamma = case["G"], case["f"], case["gamma"]
    n = 16
    pts = np.stack([g.ravel() for g in np.meshgrid(*([np.arange(n) / n] * f.dimension), indexing="ij")], axis=1)
    exact = chain_rule_grid(G, f, gamma, n).ravel()
    h = 1e-3 * sum(gamma)
    fd = fd_mixed_derivative(lambda P: G(f.evaluate_at(P.T if f.dimension > 1 else P[:, 0])), pts, gamma, h)
    assert np.max(np.abs(fd - exact)) <= 1e-6 * np.max(np.abs(exact))


def test_chain_rule_spectral_agreement():
    for case in chain_rule_suite()[:10]:
        G, f, gamma = case["G"], case["f"], case["gamma"]
        K = 4 * f.cutoff + 8
        n = 16 * K
        comp = forward_transform(GridField(G(f.grid_values(n))), K)
        want = derivative(comp, gamma)
        got = chain_rule_eval(G, f, gamma, cutoff=K, n=n)
        assert np.max(np.abs(got.coeffs - want.coeffs)) <= 1e-8 * np.max(np.abs(want.coeffs))


def test_composite_norm_affine(rng):
    f = random_field(rng, 1, 4)
    got = composite_sobolev_norm(Affine(2.0, 0.0), f, 2, 3.0)
    assert got == pytest.approx(2 * sobolev_norm(f, 2, 3.0), rel=1e-10)


def test_interpolation_endpoints(rng):
    for _ in range(10):
        f = random_field(rng, 1, 4)
        m = int(rng.integers(2, 5))
        p = float(rng.choice([2.0, 3.0]))
        low = interpolation_check(f, m, p, 1)
        high = interpolation_check(f, m, p, m)
        assert low.theta == 0 and high.theta == 1
        assert low.ratio <= 1 + 1e-10 and high.ratio <= 1 + 1e-10
    assert interpolation_check(sin1(), 3, 2.0, 2).theta == 0.5
    with pytest.raises(ValueError):
        interpolation_check(sin1(), 2, 2.0, 3)


def test_interpolation_middle_bounded(rng):
    ratios = [interpolation_check(random_field(rng, 1, 5), 3, 2.0, 2).ratio for _ in range(30)]
    assert max(ratios) < 10


def test_moser_examples():
    C = load_baselines()["moser_C_star"]
    f = sin1() * 3
    assert moser_check(Affine(), f, 2, 2.0).ratio <= 1.0
    assert moser_check(Affine(0.0, 0.0), f, 2, 2.0).ratio == 0.0
    for s in (5.0, 10.0):
        r = moser_check(TanhScaled(1.0), sin1(3) * s, 2, 2.0)
        assert np.isfinite(r.ratio) and r.ratio <= C
    with pytest.raises(ValueError):
        moser_check(Affine(), f, 1, 2.0)


def test_moser_x_dependent_examples():
    C = load_baselines()["moser_C_star"]
    f = sin1()
    assert moser_check_x_dependent(SeparableFunction.identity(1), f, 2, 2.0).ratio <= 1.0
    g = SpectralField.from_function(lambda x: np.sin(TWO_PI * x), 1, 1)
    bounded = SeparableFunction(g, Affine(0.0, 1.0))
    r = [moser_check_x_dependent(bounded, f * s, 2, 2.0) for s in (1, 10, 100)]
    assert r[0].lhs == pytest.approx(r[2].lhs, rel=1e-10)
    assert r[2].ratio < r[1].ratio < r[0].ratio and r[2].ratio < 1e-3
    mixed = SeparableFunction(g, TanhScaled(1.0))
    assert moser_check_x_dependent(mixed, f * 3, 2, 2.0).ratio <= C


def test_moser_report_rejects_nan():
    from torus_spde.analysis import MoserReport
    with pytest.raises(ValueError):
        MoserReport(float("nan"), 1.0, 1.0)


def test_first_order_examples(rng):
    f = random_field(rng, 1, 4)
    r = first_order_check(Affine(), f, 2.0)
    assert r.lhs / r.rhs < 1 and r.holds
    r = first_order_check(Affine(0.0, 2.5), f, 3.0)
    assert r.lhs == pytest.approx(2.5) and r.lhs <= 2.5 * r.rhs


@given(seed=st.integers(0, 2**31), kind=st.integers(0, 3), p=st.sampled_from([2.0, 3.0, 4.0]))
def test_first_order_property(seed, kind, p):
    rng = np.random.default_rng(seed)
    G = [TanhScaled(1.7), AtanScaled(0.6), Sine(1.1, 2.0), Affine(-0.4, 0.9)][kind]
    f = random_field(rng, 1, 4) * float(rng.uniform(0, 5))
    assert first_order_check(G, f, p).holds
    g = random_field(rng, 1, 2) * 0.3 + 1.0
    assert first_order_check(SeparableFunction(g, G), f, p).holds


def test_holder_examples():
    assert holder_norm(SpectralField.constant(1.0, 1, 2), 1, 0.3) == pytest.approx(1.0)
    u = sin1()
    n = 64
    sup = float(np.max(np.abs(u.grid_values(n))))
    assert sup == pytest.approx(1.0)
    want = sup + grid_holder_quotient(u.grid_values(n), 0.5)
    assert holder_norm(u, 0, 0.5, n=n) == pytest.approx(want, rel=1e-12)
    with pytest.raises(ValueError):
        holder_norm(u, 0, 1.0)


def test_embedding_ratio_bounded(rng):
    ratios = []
    for _ in range(15):
        u = random_field(rng, 1, int(rng.integers(1, 6)), decay=float(rng.uniform(0.5, 2.5)))
        ratios.append(embedding_ratio(u, 0, 0.4, 1, 4.0))
    assert max(ratios) < 10 * min(ratios) + 10
    with pytest.raises(ValueError):
        embedding_ratio(sin1(), 1, 0.5, 1, 2.0)


@given(a=st.floats(1e-3, 1e3), b=st.floats(1e-3, 1e3), m=st.integers(2, 12))
def test_endpoint_maximum(a, b, m):
    r = endpoint_maximum_check(a, b, m)
    assert r.at_endpoint
    vals = [a ** (x - (m - x) / (m - 1)) * b ** ((m - x) / (m - 1)) for x in range(1, m + 1)]
    assert max(vals[0], vals[-1]) >= max(vals) * (1 - 1e-10)
