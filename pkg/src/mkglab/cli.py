"""Command-line driver.

Subcommands:
    run <config>              full pipeline, outputs + report
    converge <config> -N     refinement study
    oracle <case>             wave-oracle self tests
    asys <config>             asymptotic-system run + weak-null certificate
    report <dir>              re-render a stored report

Exit codes: 0 all checks passed, 1 some check failed, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import asymptotic_system as asys_mod
from .config import ConfigError, parse_config, run_config_hash
from .pipeline import convergence_study, run_pipeline, write_failed_marker

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _load_config(path: str):
    try:
        with open(path) as f:
            return parse_config(f.read())
    except FileNotFoundError:
        print(f"config file not found: {path}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    out_dir = args.out or cfg.output["directory"]
    try:
        report = run_pipeline(cfg, out_dir=out_dir, progress=print,
                              full_criteria=args.full,
                              module_checks=not args.quick)
    except Exception as exc:
        write_failed_marker(out_dir, exc)
        print(f"PIPELINE FAILED: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _print_report(report.to_dict())
    return EXIT_PASS if report.all_passed() else EXIT_FAIL


def cmd_converge(args) -> int:
    cfg = _load_config(args.config)
    study = convergence_study(cfg, levels=args.levels, progress=print)
    print(json.dumps(study, indent=1, default=str))
    ok = not study["flags"] and all(
        info.get("status") == "ok" for info in study["levels"])
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_oracle(args) -> int:
    from .data_builder import GaussianProfile
    from .wave_oracle import (RadialSource, dalembert_free, kirchhoff_eval,
                              solve_inhom_radial)
    case = args.case
    ok = True
    if case in ("mms", "all"):
        src = RadialSource(F=lambda t, r: np.exp(-t - r * r) * (7.0 - 4.0 * r * r))
        inhom = solve_inhom_radial(src, 1.0, 1.0, abs_tol=1e-10)
        hom = dalembert_free(GaussianProfile(), lambda x: -np.exp(-x * x), 1.0, 1.0).real
        err = abs(inhom + hom - np.exp(-2.0))
        ok &= err < 1e-6
        print(f"mms: |error| = {err:.3e}  {'PASS' if err < 1e-6 else 'FAIL'}")
    if case in ("agreement", "all"):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(200):
            g = GaussianProfile(float(rng.uniform(-1, 1)), float(rng.uniform(0.5, 2)))
            h = GaussianProfile(float(rng.uniform(-1, 1)), float(rng.uniform(0.5, 2)))
            t, r = float(rng.uniform(0.2, 6)), float(rng.uniform(0.1, 8))
            worst = max(worst, abs(dalembert_free(g, h, t, r).real
                                   - kirchhoff_eval(g, h, t, r, order=160)))
        ok &= worst < 1e-8
        print(f"agreement: worst = {worst:.3e}  {'PASS' if worst < 1e-8 else 'FAIL'}")
    if case in ("positivity", "all"):
        src = RadialSource(F=lambda t, r: np.exp(-((t - 1) ** 2) - (r - 2.0) ** 2))
        vals = [solve_inhom_radial(src, t, r, fast=True)
                for t in (1.0, 3.0, 6.0) for r in (0.5, 2.0, 5.0)]
        neg = min(vals)
        ok &= neg >= -1e-12
        print(f"positivity: min value = {neg:.3e}  {'PASS' if neg >= -1e-12 else 'FAIL'}")
    if case not in ("mms", "agreement", "positivity", "all"):
        print(f"unknown oracle case {case!r} (mms|agreement|positivity|all)",
              file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_asys(args) -> int:
    cfg = _load_config(args.config)
    amp = cfg.data["amplitude"]
    q_grid = np.linspace(cfg.extraction["q_min"], cfg.extraction["q_max"], 1201)
    phi0 = amp * np.exp(-q_grid ** 2) * (q_grid / 2.0 + 0.25j)
    a_l = amp ** 2 * np.sqrt(np.pi / 2.0) / 8.0
    st = asys_mod.AsymState.from_phi0(q_grid, phi0, A_L_param=a_l)
    final, hist = asys_mod.integrate(st, args.s_end, args.ds,
                                     record_every=max(1, int(round(args.s_end / (10.0 * args.ds)))))
    cert = asys_mod.weak_null_certificate(hist, args.ds)
    out_dir = args.out or cfg.output["directory"]
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "asys.csv")
    with open(path, "w") as f:
        f.write(f"# mkglab asys output, config_hash={run_config_hash(cfg)}\n")
        f.write("q,s,absP,Re_Phi,Im_Phi,A_Lbar\n")
        for stt in hist:
            phi = stt.phi()
            alb = stt.A_frame()["A_Lbar"]
            for i in range(0, len(q_grid), 40):
                f.write(f"{q_grid[i]:.17g},{stt.s:.17g},{abs(stt.P[i]):.17g},"
                        f"{phi[i].real:.17g},{phi[i].imag:.17g},{alb[i]:.17g}\n")
    print(json.dumps(cert, indent=1))
    print(f"wrote {path}")
    return EXIT_PASS if cert["passed"] else EXIT_FAIL


def cmd_report(args) -> int:
    path = os.path.join(args.dir, "report.json")
    if not os.path.exists(path):
        print(f"no report.json under {args.dir}", file=sys.stderr)
        return EXIT_CONFIG
    with open(path) as f:
        rep = json.load(f)
    _print_report(rep)
    return EXIT_PASS if rep.get("all_passed") else EXIT_FAIL


def _print_report(rep: dict) -> None:
    print(f"config hash: {rep['config_hash']}")
    print(f"charge Q = {rep['charge_Q']:.10e}")
    for c in rep["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"[{status}] {c['id']}: measured {c['measured']:.6g} "
              f"(tolerance {c['tolerance']:.6g}) - {c['description']}")
    print("ALL PASSED" if rep.get("all_passed") else "SOME CHECKS FAILED")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mkglab", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run the full pipeline")
    pr.add_argument("config")
    pr.add_argument("--out", default=None)
    pr.add_argument("--full", action="store_true",
                    help="include the domain-doubling envelope companion run")
    pr.add_argument("--quick", action="store_true",
                    help="skip the oracle/kernel/convergence spot checks")
    pr.set_defaults(func=cmd_run)

    pc = sub.add_parser("converge", help="grid refinement study")
    pc.add_argument("config")
    pc.add_argument("--levels", "-N", type=int, default=3)
    pc.set_defaults(func=cmd_converge)

    po = sub.add_parser("oracle", help="wave-oracle self tests")
    po.add_argument("case", nargs="?", default="all")
    po.set_defaults(func=cmd_oracle)

    pa = sub.add_parser("asys", help="asymptotic-system run")
    pa.add_argument("config")
    pa.add_argument("--s-end", type=float, default=50.0)
    pa.add_argument("--ds", type=float, default=1e-2)
    pa.add_argument("--out", default=None)
    pa.set_defaults(func=cmd_asys)

    pp = sub.add_parser("report", help="re-render a stored report")
    pp.add_argument("dir")
    pp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
