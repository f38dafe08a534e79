"""
Moments along the Picard sequence
=================================

For a Monte Carlo ensemble the harness estimates
``K_n = E sup_t ||u^n(t)||^q_{W^{m,p}}`` for every level ``n``. The sequence
levels off, and the fitted constant in the bound against the initial-data
moments stays finite when the initial data is scaled.
"""

from torus_spde import run_moments, theorem_scaling_study, uniformity_check
from torus_spde.suites import scaling_config

base = scaling_config(paths=40)
cfg = base.replace(solver=base.solver.replace(n_max=8))
rep = run_moments(cfg)
for n, (k, se) in enumerate(zip(rep.K, rep.K_se)):
    print(f"n = {n}  K_n = {k:.5f} +- {se:.5f}")
u = uniformity_check(rep)
print("plateau:", u.plateau_pass, " threshold", round(u.threshold, 5), " tail ratio", round(u.tail_ratio, 4))

study = theorem_scaling_study(base, [0.0, 1.0, 2.0, 4.0])
for row in study.table():
    print(f"s = {row['scale']:.0f}  lhs {row['lhs']:10.4f}  rhs {row['rhs']:10.4f}  ratio {row['ratio']:.4f}")
print("fitted C =", study.C)
