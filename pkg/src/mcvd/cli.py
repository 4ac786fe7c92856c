"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import yaml

from . import harness, optimizer
from .errors import ConfigError, NumericalError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcvd",
                                     description="Molecular-communication link simulator "
                                                 "with duration-reuse ISI mitigation")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="scheme-comparison BER sweep")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=".", help="output directory (default: cwd)")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--trials", type=int, default=None)
    run.add_argument("--mode", choices=("gaussian", "binomial"), default=None)
    run.add_argument("--jobs", type=int, default=1, help="worker threads (results are "
                                                         "identical for any value)")
    run.add_argument("--override-validity", action="store_true",
                     help="accept a passive geometry violating r/(r+d) < 0.15")

    cir = sub.add_parser("cir", help="export the desired/ISI response decomposition")
    cir.add_argument("--config", required=True)
    cir.add_argument("--out", required=True)
    cir.add_argument("--override-validity", action="store_true")

    opt = sub.add_parser("optimize", help="print the reusable-duration optimization result")
    opt.add_argument("--config", required=True)
    opt.add_argument("--q", type=int, default=None,
                     help="molecule budget (default: first Q in the config)")
    opt.add_argument("--no-ideal", action="store_true",
                     help="skip the exhaustive-BER benchmark candidate")
    opt.add_argument("--override-validity", action="store_true")
    return parser


def _cmd_run(args) -> int:
    cfg = harness.load_config(args.config, override_validity=args.override_validity)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.mode is not None:
        overrides["mode"] = args.mode
    if overrides:
        raw = harness.config_dict(cfg)
        raw.update(overrides)
        cfg = harness.build_config(raw, override_validity=args.override_validity)
    os.makedirs(args.out, exist_ok=True)
    rows, failures = harness.run_sweep(cfg, jobs=args.jobs)
    csv_path = os.path.join(args.out, "sweep.csv")
    json_path = os.path.join(args.out, "plotdata.json")
    if rows:
        harness.write_csv(rows, csv_path)
        harness.emit_plotdata(rows, json_path)
        print(f"wrote {csv_path} and {json_path} ({len(rows)} rows)")
    for scheme, q, message in failures:
        print(f"FAILED {scheme} Q={q}: {message}", file=sys.stderr)
    return 3 if failures else 0


def _cmd_cir(args) -> int:
    cfg = harness.load_config(args.config, override_validity=args.override_validity)
    harness.export_cir(cfg, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_optimize(args) -> int:
    cfg = harness.load_config(args.config, override_validity=args.override_validity)
    q = args.q if args.q is not None else cfg.q_values[0]
    link = cfg.link(q)
    result = optimizer.optimize(link, cfg.channel, q,
                                points=cfg.grid.tu_points,
                                threshold_points=cfg.grid.threshold_points,
                                include_ideal=not args.no_ideal)
    doc = {"receiver": result.kind, "Q": q, "bar_edge": result.bar_edge,
           "pre_estimate": result.pre_estimate, "alpha": result.alpha,
           "beta": result.beta, "ln_correction": result.ln_correction,
           "clamp_applied": result.clamp_applied,
           "candidates": {k: (None if v is None or (isinstance(v, float) and math.isnan(v))
                              else float(v))
                          for k, v in sorted(result.candidates.items())}}
    yaml.safe_dump(doc, sys.stdout, sort_keys=False)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "cir":
            return _cmd_cir(args)
        return _cmd_optimize(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
