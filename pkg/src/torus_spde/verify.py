"""Frozen-seed verification suites grouped by module.

:func:`run_full_verification` executes the suites, collects every check as
``{"name", "value", "bound", "passed"}`` and returns an exit status together
with a JSON-serialisable report. Suites that compare against stored
constants load the baseline file first and fail loudly on a checksum
mismatch.
"""

from __future__ import annotations

import math
import time

import numpy as np

from . import analysis
from .baselines import SCALING_SCALES, load_baselines, moser_ratios
from .elliptic import DiagonalOperator, apply_semigroup, smoothing_bound_check
from .functions import Affine, SeparableFunction
from .harness import run_moments, theorem_scaling_study, uniformity_check
from .model import (DiffusionSpec, Model, gamma_norm_closed, gamma_norm_mc, gaussian_moment_constant,
                    growth_and_lipschitz_certify)
from .solver import contraction_probe, factorization_check
from .spectral import SpectralField, _grid_to_coeffs, derivative, lp_norm, random_field
from .suites import (chain_rule_suite, contraction_config, gamma_suite, moser_suite, scaling_config,
                     uniformity_config)
from .wiener import sample_wiener_path

__all__ = ["SUITES", "run_full_verification"]


def _check(name: str, value: float, bound: float, passed: bool) -> dict:
    return {"name": name, "value": float(value), "bound": float(bound), "passed": bool(passed)}


def gamma_checks(_baselines=None) -> list[dict]:
    out = []
    unit = DiffusionSpec((SeparableFunction.constant(1.0, 1),))
    zero = SpectralField.zeros(1, 2)
    est = gamma_norm_mc(unit, zero, 2.0, samples=20_000, seed=1)
    out.append(_check("unit constant diffusion", est.estimate, 1.0,
                      abs(est.estimate - 1.0) <= 3 * est.std_error))
    for i, case in enumerate(gamma_suite()):
        spec, u, p = case["diffusion"], case["u"], case["p"]
        mc = gamma_norm_mc(spec, u, p, samples=5_000, seed=100 + i)
        closed = gamma_norm_closed(spec, u, p)
        out.append(_check(f"gamma mc <= closed [{i}]", mc.estimate, closed + 3 * mc.std_error,
                          mc.estimate <= closed + 3 * mc.std_error))
        C = gaussian_moment_constant(p) ** 2 * growth_and_lipschitz_certify(spec).C_growth
        rhs = C * (1 + lp_norm(u, p) ** 2)
        out.append(_check(f"linear growth [{i}]", closed**2, rhs, closed**2 <= rhs * (1 + 1e-9)))
    return out


def analysis_checks(baselines) -> list[dict]:
    out = []
    for i, case in enumerate(chain_rule_suite()):
        G, f, gamma = case["G"], case["f"], case["gamma"]
        K = 4 * f.cutoff + 8
        n = 16 * K
        comp = SpectralField(_grid_to_coeffs(G(f.grid_values(n)), f.dimension, K))
        spectral = derivative(comp, gamma)
        chain = analysis.chain_rule_eval(G, f, gamma, cutoff=K, n=n)
        err = float(np.max(np.abs(spectral.coeffs - chain.coeffs)))
        scale = max(float(np.max(np.abs(spectral.coeffs))), 1e-300)
        out.append(_check(f"chain rule vs spectral [{i}]", err / scale, 1e-8, err / scale <= 1e-8))
    ratios = moser_ratios()
    C = baselines["moser_C_star"]
    out.append(_check("Moser ratio <= C*", max(ratios), C, max(ratios) <= C))
    rng = np.random.default_rng(3)
    for i in range(10):
        f = random_field(rng, 1, 3, decay=1.0)
        m = int(rng.integers(2, 4))
        p = float(rng.choice([2.0, 4.0]))
        for k in (1, m):
            r = analysis.interpolation_check(f, m, p, k)
            out.append(_check(f"interpolation endpoint |a|={k} [{i}]", r.ratio, 1 + 1e-10, r.ratio <= 1 + 1e-10))
        ep = analysis.endpoint_maximum_check(float(rng.uniform(0.1, 5)), float(rng.uniform(0.1, 5)), m + 2)
        out.append(_check(f"endpoint maximum [{i}]", ep.argmax, m + 2, ep.at_endpoint))
    for i, case in enumerate(moser_suite()[:24]):
        r = analysis.first_order_check(case["G"], case["f"], case["p"])
        out.append(_check(f"first-order bound [{i}]", r.lhs, r.constant * r.rhs, r.holds))
    return out


def solver_checks(_baselines=None) -> list[dict]:
    out = []
    op = DiagonalOperator()
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        u = random_field(rng, 1, 6, decay=1.0)
        s, t = rng.uniform(0, 0.1, size=2)
        a = apply_semigroup(op, s, apply_semigroup(op, t, u))
        b = apply_semigroup(op, s + t, u)
        worst = max(worst, float(np.max(np.abs(a.coeffs - b.coeffs))))
    out.append(_check("semigroup law", worst, 1e-11, worst <= 1e-11))
    for delta in (0.25, 0.5, 0.75):
        for t in np.logspace(-3, 0, 13):
            r = smoothing_bound_check(op, delta, float(t))
            out.append(_check(f"smoothing delta={delta} t={t:.3g}", r.measured, r.bound, r.holds))
    cfg = contraction_config()
    u0 = SpectralField.from_function(lambda x: 0.5 * np.sin(2 * np.pi * x), 1, cfg.K)
    rates = []
    for T in (cfg.T, cfg.T / 4):
        c = cfg.replace(T=T)
        paths = [sample_wiener_path(1, T, c.J, 17, i) for i in range(10)]
        rates.append(contraction_probe(c, paths, u0).measured_rate)
    out.append(_check("contraction rate < 1", rates[0], 1.0, rates[0] < 1))
    out.append(_check("contraction rate(T/4) <= 0.75 rate(T)", rates[1], 0.75 * rates[0],
                      rates[1] <= 0.75 * rates[0]))
    one = DiffusionSpec((SeparableFunction.constant(1.0, 1),))
    path = sample_wiener_path(1, 1.0, 1024, 0, 0)
    rep = factorization_check(DiagonalOperator(), Model(diffusion=one), path, 0.3,
                              deterministic=True, cutoff=4)
    out.append(_check("factorization deterministic surrogate", rep.rel_err, 1e-4, rep.rel_err <= 1e-4))
    additive = Model(diffusion=DiffusionSpec((SeparableFunction(
        SpectralField.from_modes({0: 1.0, 1: 0.5}, 1, 2), Affine(0.0, 1.0)),)))
    errs = []
    for J in (128, 256, 512):
        fine = sample_wiener_path(1, 1.0, J, 3, 0)
        ts = fine.times[J // 2 + 1:]
        errs.append(factorization_check(DiagonalOperator(), additive, fine, 0.3, ts, cutoff=2).rel_err)
    out.append(_check("factorization refinement", errs[-1], errs[0],
                      all(b < a for a, b in zip(errs[:-1], errs[1:]))))
    return out


def harness_checks(baselines) -> list[dict]:
    out = []
    cfg = uniformity_config(paths=10)
    sc = cfg.solver.replace(K=16, J=128)
    rep = run_moments(cfg.replace(solver=sc))
    u = uniformity_check(rep)
    out.append(_check("uniformity (reduced)", rep.K[-1], u.threshold, u.plateau_pass))
    out.append(_check("trajectory hashes unchanged", float(rep.hashes_consistent), 1.0, rep.hashes_consistent))
    jensen = float(np.max(rep.per_time[-1]))
    out.append(_check("sup moment >= pointwise moments", jensen, rep.K[-1], rep.K[-1] >= jensen * (1 - 1e-12)))
    study = theorem_scaling_study(scaling_config(), SCALING_SCALES)
    pinned = baselines["scaling_C"]
    ok = math.isfinite(study.C) and abs(study.C - pinned) <= 1e-6 * abs(pinned)
    out.append(_check("scaling constant pinned", study.C, pinned, ok))
    return out


SUITES = {
    "gamma": gamma_checks,
    "analysis": analysis_checks,
    "solver": solver_checks,
    "harness": harness_checks,
}
_NEEDS_BASELINE = {"analysis", "harness"}


def run_full_verification(filter: str | None = None, baseline_path=None) -> tuple[int, dict]:
    """Run the suites whose names contain ``filter`` (all by default).

    Returns ``(status, report)``; ``status`` is 0 when every check passes.
    Raises :class:`~torus_spde.baselines.BaselineError` when a needed
    baseline file is missing or corrupted.
    """
    names = [s for s in SUITES if filter is None or filter in s]
    if not names:
        raise ValueError(f"no suite matches filter {filter!r}; choose from {sorted(SUITES)}")
    baselines = load_baselines(baseline_path) if _NEEDS_BASELINE & set(names) else None
    report = {"suites": {}, "passed": True}
    for name in names:
        t0 = time.perf_counter()
        checks = SUITES[name](baselines)
        ok = all(c["passed"] for c in checks)
        report["suites"][name] = {"passed": ok, "seconds": time.perf_counter() - t0, "checks": checks}
        report["passed"] &= ok
    return (0 if report["passed"] else 1), report
