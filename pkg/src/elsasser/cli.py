"""Command-line entry point: ``elsasser {run,sweep,verify,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from .config import SCENARIOS, ConfigError, SimConfig, load_config, parse_config
from .experiment import (
    emit_report,
    epsilon_sweep,
    largest_passing_epsilon,
    refinement_study,
    run_experiment,
    summary_from_series,
)
from .oracles import run_oracle_suite

THREADS_ENV = "ELSASSER_THREADS"

log = logging.getLogger("elsasser")


def _threads(arg: int | None) -> int:
    if arg is not None:
        n = arg
    else:
        n = int(os.environ.get(THREADS_ENV, "1"))
    if n < 1:
        raise ConfigError("thread count must be >= 1")
    return n


def _apply_overrides(cfg: SimConfig, args) -> SimConfig:
    d = cfg.initial_data
    if args.seed is not None:
        d = replace(d, seed=args.seed)
    if args.scenario is not None:
        d = replace(d, kind=args.scenario)
    cfg = replace(cfg, initial_data=d)
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    return cfg


def _load(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else parse_config("")
    return _apply_overrides(cfg, args)


def cmd_run(args) -> int:
    cfg = _load(args)
    if cfg.is_sweep:
        return cmd_sweep(args, cfg)
    (report,) = run_experiment(cfg)
    status = emit_report(report, cfg.output_dir)
    print(f"{'PASS' if status == 0 else 'FAIL'} nu={report.nu:g} steps={report.steps} -> {cfg.output_dir}")
    for name in report.failing:
        print(f"  monitor over ceiling: {name}")
    return status


def cmd_sweep(args, cfg: SimConfig | None = None) -> int:
    cfg = cfg or _load(args)
    threads = _threads(args.threads)
    eps = getattr(args, "eps", None)
    points = getattr(args, "points", None)
    if eps:
        reports = epsilon_sweep(cfg, eps, threads)
        labels = [("eps", f"{v:.6g}") for v in eps]
    elif points:
        reports = refinement_study(cfg, points, threads)
        labels = [("points", str(n)) for n in points]
    else:
        reports = run_experiment(cfg, threads)
        labels = [("nu", f"{rep.nu:.6g}") for rep in reports]
    status = 0
    index = []
    for i, (rep, (kind, value)) in enumerate(zip(reports, labels)):
        d = os.path.join(cfg.output_dir, f"{kind}_{i:02d}_{value}")
        s = emit_report(rep, d)
        status = max(status, s)
        theorem = [m.fitted_C for m in rep.monitors if m.name.startswith("theorem_")]
        index.append({
            "nu": rep.nu,
            "epsilon": rep.initial.epsilon,
            "points_per_dim": rep.config["grid"]["points_per_dim"],
            "dir": os.path.basename(d),
            "passed": s == 0,
            "theorem_C": theorem[0] if theorem else None,
        })
        print(f"{'PASS' if s == 0 else 'FAIL'} {kind}={value} -> {d}")
    doc = {"runs": index}
    if eps:
        doc["largest_passing_epsilon"] = largest_passing_epsilon(reports)
    os.makedirs(cfg.output_dir, exist_ok=True)
    with open(os.path.join(cfg.output_dir, "sweep.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return status


def cmd_verify(args) -> int:
    results = run_oracle_suite()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: error {r.error:.3e} (tol {r.tolerance:.0e})")
    return 0 if all(r.passed for r in results) else 1


def cmd_report(args) -> int:
    summary = summary_from_series(args.run_dir)
    text = json.dumps(summary, indent=2) + "\n"
    dest = args.output or os.path.join(args.run_dir, "report.json")
    with open(dest, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"{'PASS' if summary['passed'] else 'FAIL'} -> {dest}")
    return 0 if summary["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="elsasser", description="Weighted-energy experiments for the Elsasser MHD system.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def run_flags(sp):
        sp.add_argument("--config", metavar="PATH", help="JSON configuration file")
        sp.add_argument("--out", metavar="DIR", help="output directory (overrides output_dir)")
        sp.add_argument("--threads", type=int, metavar="N", help=f"sweep workers (default ${THREADS_ENV} or 1)")
        sp.add_argument("--seed", type=int, help="override initial_data.seed")
        sp.add_argument("--scenario", choices=SCENARIOS, help="override initial_data.kind")

    sp = sub.add_parser("run", help="single run (a nu list turns it into a sweep)")
    run_flags(sp)
    sp.set_defaults(func=cmd_run)
    sp = sub.add_parser("sweep", help="one run per nu in the config, or an eps / resolution study")
    run_flags(sp)
    study = sp.add_mutually_exclusive_group()
    study.add_argument("--eps", type=float, nargs="+", metavar="E", help="target epsilons (first nu only)")
    study.add_argument("--points", type=int, nargs="+", metavar="N", help="grid sizes (first nu only)")
    sp.set_defaults(func=cmd_sweep)
    sp = sub.add_parser("verify", help="fast oracle suite, no full run")
    sp.set_defaults(func=cmd_verify)
    sp = sub.add_parser("report", help="re-derive monitor fits from a run's series.csv")
    sp.add_argument("run_dir")
    sp.add_argument("--output", metavar="PATH", help="destination (default RUN_DIR/report.json)")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
