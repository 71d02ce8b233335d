"""Command line front end: one subcommand per experiment.

Usage sketch:

    cfosim mse-sweep --trials 200 --seed 7 --out mse.csv
    cfosim tradeoff --config tradeoff.json --format json
    cfosim validate-config --config tradeoff.json

A config file is a JSON object mirroring ExperimentSpec: optional keys
"experiment", "params" (object), "trials", "seed", "workers", "format",
"out".  Precedence, highest first: command line flag, CFOSIM_WORKERS
environment variable (workers only), config file value, built-in default.
The subcommand names the experiment; a config file naming a different one
is rejected.

On success the exit code is 0 and results go to --out or stdout.  On
failure the exit code is 1 and a single JSON line describing the error is
printed to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import CfoSimError
from .xharness import (
    EXPERIMENTS,
    ExperimentSpec,
    emit_results,
    run_experiment,
    validate_spec,
)


def _add_common_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON config file mirroring the experiment spec")
    sp.add_argument("--seed", type=int, help="master seed (default 0)")
    sp.add_argument("--trials", type=int, help="Monte Carlo trials per grid point")
    sp.add_argument("--out", help="output file path (default: stdout)")
    sp.add_argument("--format", choices=("csv", "json"), dest="fmt", help="output format")
    sp.add_argument("--workers", type=int, help="thread count (default 1)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cfosim",
        description="Monte Carlo experiments for multiuser CFO estimation and TR-MRC reception",
    )
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")
    for exp in EXPERIMENTS:
        sp = sub.add_parser(exp, help=f"run the {exp} experiment")
        _add_common_flags(sp)
    vp = sub.add_parser("validate-config", help="validate a config file without running")
    vp.add_argument("--config", required=True, help="JSON config file to check")
    return ap


def _load_config(path: str) -> dict:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise ValueError(f"config {path} must hold a JSON object")
    return doc


def _assemble_spec(args: argparse.Namespace, experiment: str) -> tuple[ExperimentSpec, str, str | None]:
    doc = _load_config(args.config) if args.config else {}
    named = doc.get("experiment")
    if named is not None and named != experiment:
        raise ValueError(
            f"config names experiment {named!r} but the {experiment!r} subcommand was invoked"
        )
    if args.workers is not None:
        workers = args.workers
    elif os.environ.get("CFOSIM_WORKERS"):
        workers = int(os.environ["CFOSIM_WORKERS"])
    else:
        workers = int(doc.get("workers", 1))
    spec = ExperimentSpec(
        experiment=experiment,
        params=dict(doc.get("params", {})),
        trials=args.trials if args.trials is not None else doc.get("trials"),
        seed=args.seed if args.seed is not None else int(doc.get("seed", 0)),
        workers=workers,
    )
    fmt = args.fmt or doc.get("format", "csv")
    out = args.out if args.out is not None else doc.get("out")
    return spec, fmt, out


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate-config":
            doc = _load_config(args.config)
            experiment = doc.get("experiment")
            if not experiment:
                raise ValueError("config must name an experiment to validate")
            spec = ExperimentSpec(
                experiment=experiment,
                params=dict(doc.get("params", {})),
                trials=doc.get("trials"),
                seed=int(doc.get("seed", 0)),
                workers=int(doc.get("workers", 1)),
            )
            validate_spec(spec)
            print(json.dumps({"status": "ok", "experiment": experiment}))
            return 0
        spec, fmt, out = _assemble_spec(args, args.command)
        rows = run_experiment(spec)
        text = emit_results(rows, fmt, out)
        if out is None:
            sys.stdout.write(text)
        return 0
    except (CfoSimError, ValueError, OSError) as e:
        sys.stderr.write(json.dumps({"error": type(e).__name__, "message": str(e)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
