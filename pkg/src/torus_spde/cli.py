"""Command-line interface: ``torus-spde <command> [options]``.

Commands
--------
simulate     Picard solves per path; norm time series and snapshots (CSV).
moments      Sobolev moments along Picard levels (JSON + CSV).
verify       frozen-seed verification suites (JSON); exit status 1 on failure.
scaling      moment bound under ``u0 -> s u0`` (JSON + CSV).
convergence  Picard distances per level and contraction summary (CSV + JSON).

Every output file carries the configuration hash in its first line (a
``# config_hash: ...`` comment for CSV and binary dumps, a leading
``config_hash`` key for JSON). The thread count comes from the
``TORUS_SPDE_THREADS`` environment variable.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .baselines import BaselineError
from .config import ExperimentConfig, load_config
from .harness import run_moments, theorem_scaling_study, uniformity_check
from .solver import contraction_probe, picard_solve
from .spectral import SpectralField, _sobolev_norm_coeffs
from .suites import scaling_config
from .verify import SUITES, run_full_verification
from .wiener import sample_wiener_path

__all__ = ["main", "read_dump", "write_dump"]


def _resolve_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        base = scaling_config(paths=10)
        cfg = base.replace(solver=base.solver.replace(n_max=14))
    sc = cfg.solver
    changes = {}
    if getattr(args, "steps", None):
        changes["J"] = args.steps
    if getattr(args, "modes", None) is not None:
        changes["K"] = args.modes
    if changes:
        sc = sc.replace(**changes)
    updates = {"solver": sc}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.paths is not None:
        updates["paths"] = args.paths
    return cfg.replace(**updates)


def _header(h: str) -> str:
    return f"# config_hash: {h}\n"


def _write_csv(path: Path, h: str, columns, rows) -> None:
    with path.open("w", newline="") as fh:
        fh.write(_header(h))
        w = csv.writer(fh)
        w.writerow(columns)
        w.writerows(rows)


def _write_json(path: Path, h: str, payload: dict) -> None:
    path.write_text(json.dumps({"config_hash": h, **payload}, indent=2, default=float) + "\n")


def write_dump(path, h: str, coeffs: np.ndarray) -> None:
    """Raw complex trajectory with a one-line text header (hash, shape, dtype)."""
    c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    with open(path, "wb") as fh:
        fh.write(f"# config_hash: {h} shape: {','.join(map(str, c.shape))} dtype: complex128\n".encode())
        fh.write(c.tobytes())


def read_dump(path) -> tuple[str, np.ndarray]:
    with open(path, "rb") as fh:
        head = fh.readline().decode().split()
        data = fh.read()
    h = head[head.index("config_hash:") + 1]
    shape = tuple(int(x) for x in head[head.index("shape:") + 1].split(","))
    return h, np.frombuffer(data, dtype=np.complex128).reshape(shape)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    sc, h, out = cfg.solver, cfg.config_hash(), _out_dir(args)
    N, K = sc.dimension, sc.K
    snap_idx = np.unique(np.linspace(0, sc.J, max(args.snapshots, 2)).round().astype(int))
    norm_rows, snap_rows, conv = [], [], 0
    for i in range(cfg.paths):
        path = sample_wiener_path(sc.model.diffusion.d, sc.T, sc.J, cfg.seed, i)
        u0 = SpectralField(cfg.initial.sample(i, cfg.seed, K, N, sc.m, sc.p))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = picard_solve(sc, path, u0)
        conv += res.converged
        traj = res.final
        l2 = traj.lp_norms(2.0)
        wmp = _sobolev_norm_coeffs(traj.coeffs, N, sc.m, sc.p)
        for t, a, b in zip(traj.times, l2, wmp):
            norm_rows.append((i, f"{t:.12g}", f"{a:.12e}", f"{b:.12e}"))
        for j in snap_idx:
            for k, c in np.ndenumerate(traj.coeffs[j]):
                snap_rows.append((i, f"{traj.times[j]:.12g}", *(x - K for x in k), f"{c.real:.12e}", f"{c.imag:.12e}"))
        if args.binary:
            write_dump(out / f"trajectory_{i:05d}.bin", h, traj.coeffs)
    _write_csv(out / "norms.csv", h, ["path", "t", "L2", f"W{sc.m}_{sc.p:g}"], norm_rows)
    _write_csv(out / "snapshots.csv", h, ["path", "t", *[f"k{a}" for a in range(N)], "re", "im"], snap_rows)
    print(f"simulated {cfg.paths} paths ({conv} converged) -> {out} [config {h}]")
    return 0


def cmd_moments(args) -> int:
    cfg = _resolve_config(args)
    rep = run_moments(cfg)
    out = _out_dir(args)
    payload = rep.to_dict()
    payload.pop("config_hash")
    if cfg.solver.n_max >= 5:
        u = uniformity_check(rep)
        payload["uniformity"] = {"plateau_pass": u.plateau_pass, "threshold": u.threshold, "tail_ratio": u.tail_ratio}
    _write_json(out / "moments.json", rep.config_hash, payload)
    rows = [(f"{t:.12g}", *[f"{v:.12e}" for v in rep.per_time[:, j]]) for j, t in enumerate(rep.times)]
    _write_csv(out / "moments_per_time.csv", rep.config_hash, ["t", *[f"level{n}" for n in range(rep.levels)]], rows)
    print(f"K_n = {np.array2string(rep.K, precision=4)}  [config {rep.config_hash}]")
    return 0


def cmd_scaling(args) -> int:
    cfg = _resolve_config(args)
    study = theorem_scaling_study(cfg, args.scales)
    out, h = _out_dir(args), cfg.config_hash()
    _write_json(out / "scaling.json", h, {"C": study.C, "rows": study.table(), "config": cfg.to_dict()})
    _write_csv(out / "scaling.csv", h, ["scale", "lhs", "lhs_se", "rhs", "ratio"],
               [(r["scale"], r["lhs"], r["lhs_se"], r["rhs"], r["ratio"]) for r in study.table()])
    print(f"fitted C = {study.C:.6g} over scales {list(args.scales)}  [config {h}]")
    return 0


def cmd_convergence(args) -> int:
    cfg = _resolve_config(args)
    sc, h, out = cfg.solver, cfg.config_hash(), _out_dir(args)
    rows = []
    paths = [sample_wiener_path(sc.model.diffusion.d, sc.T, sc.J, cfg.seed, i) for i in range(cfg.paths)]
    u0 = SpectralField(cfg.initial.sample(0, cfg.seed, sc.K, sc.dimension, sc.m, sc.p))
    for path in paths:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = picard_solve(sc, path, u0, stop_on_tol=False)
        rows.extend((path.path_index, n + 1, f"{d:.12e}") for n, d in enumerate(res.deltas))
    rep = contraction_probe(sc, paths, u0)
    _write_csv(out / "convergence.csv", h, ["path", "level", "delta"], rows)
    _write_json(out / "contraction.json", h, {"measured_rate": rep.measured_rate, "predicted": rep.predicted,
                                               "delta": rep.delta, "constant": rep.constant,
                                               "degenerate": rep.degenerate})
    print(f"measured rate {rep.measured_rate:.4g}, predicted {rep.predicted:.4g}  [config {h}]")
    return 0


def cmd_verify(args) -> int:
    try:
        status, report = run_full_verification(args.filter, args.baseline)
    except BaselineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = _out_dir(args)
    h = hashlib.sha256(json.dumps({"command": "verify", "filter": args.filter}).encode()).hexdigest()[:16]
    _write_json(out / "verify.json", h, report)
    for name, suite in report["suites"].items():
        failed = [c["name"] for c in suite["checks"] if not c["passed"]]
        tag = "PASS" if suite["passed"] else "FAIL"
        print(f"{tag} {name}: {len(suite['checks'])} checks, {suite['seconds']:.1f} s" +
              (f"; failed: {', '.join(failed)}" if failed else ""))
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="torus-spde", description="Stochastic PDEs on the torus.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, solver=True):
        p.add_argument("--out-dir", default=".", help="directory for output files")
        if solver:
            p.add_argument("--config", help="JSON experiment configuration")
            p.add_argument("--seed", type=int, help="override the master seed")
            p.add_argument("--paths", type=int, help="override the number of paths")
            p.add_argument("--steps", type=int, help="override the number of time steps J")
            p.add_argument("--modes", type=int, help="override the mode cutoff K")

    p = sub.add_parser("simulate", help="solve and write norm time series")
    common(p)
    p.add_argument("--snapshots", type=int, default=5, help="number of snapshot times")
    p.add_argument("--binary", action="store_true", help="also dump raw trajectories")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("moments", help="Sobolev moments per Picard level")
    common(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("scaling", help="moment bound under u0 -> s u0")
    common(p)
    p.add_argument("--scales", type=float, nargs="+", default=[0.0, 1.0, 2.0, 4.0])
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("convergence", help="Picard distances per level")
    common(p)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("verify", help="run the verification suites")
    common(p, solver=False)
    p.add_argument("--filter", choices=sorted(SUITES), help="run only one suite")
    p.add_argument("--baseline", help="baseline file (default: packaged)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
