"""Command-line workbench.

Verbs: fluxonium, evaluate, optimize, aggregate, classify, bounds, grape,
simulate, truncation-study.  Exit codes: 0 success, 2 configuration error,
3 numerical failure, 4 missing upstream artifact.
"""

from __future__ import annotations

import argparse
import sys

from .exceptions import ConfigError, DependencyError, FluxspotError
from .workbench import (
    RunDirectory,
    cmd_aggregate,
    cmd_bounds,
    cmd_classify,
    cmd_evaluate,
    cmd_fluxonium,
    cmd_grape,
    cmd_optimize,
    cmd_simulate,
    cmd_truncation_study,
    load_config,
)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluxspot",
        description="Dynamical-sweet-spot workbench for flux-modulated qubits",
    )
    parser.add_argument("--config", help="path to the JSON run configuration")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--threads", type=int, help="evaluation worker threads")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("fluxonium", help="diagonalize the circuit, write the fixture")
    p_eval = sub.add_parser("evaluate", help="rates of one genome file")
    p_eval.add_argument("genome", help="JSON genome or {'benchmark': name} file")
    sub.add_parser("optimize", help="run the evolutionary searches")
    sub.add_parser("aggregate", help="aggregate run-level fronts")
    sub.add_parser("classify", help="label sweet spots on the aggregated front")
    sub.add_parser("bounds", help="check relaxation-time bounds on the front")
    p_grape = sub.add_parser("grape", help="optimize the configured gate jobs")
    p_grape.add_argument("--job", type=int, default=None, help="gate job index")
    p_sim = sub.add_parser("simulate", help="open-system run of a stored pulse")
    p_sim.add_argument("pulse", help="pulse artifact name (without pulse_/.json)")
    sub.add_parser("truncation-study", help="solver-vs-propagator error sweep")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.threads is not None:
            cfg["threads"] = args.threads
        out_dir = args.out if args.out else cfg["output_dir"]
        run = RunDirectory(out_dir, cfg)

        if args.command == "fluxonium":
            path = cmd_fluxonium(cfg, run)
        elif args.command == "evaluate":
            path = cmd_evaluate(cfg, run, args.genome)
        elif args.command == "optimize":
            paths = cmd_optimize(cfg, run, n_threads=int(cfg.get("threads", 1)))
            path = paths[-1] if paths else run.root
        elif args.command == "aggregate":
            path = cmd_aggregate(cfg, run)
        elif args.command == "classify":
            path = cmd_classify(cfg, run)
        elif args.command == "bounds":
            path, violations = cmd_bounds(cfg, run)
            print(f"wrote {path} ({violations} violations)")
            return 0 if violations == 0 else 3
        elif args.command == "grape":
            jobs = cfg["gates"]
            if not jobs:
                raise ConfigError("config contains no gate jobs")
            picked = jobs if args.job is None else [jobs[args.job]]
            for job in picked:
                path = cmd_grape(cfg, run, job)
                print(f"wrote {path}")
            return 0
        elif args.command == "simulate":
            path = cmd_simulate(cfg, run, args.pulse)
        elif args.command == "truncation-study":
            path = cmd_truncation_study(cfg, run)
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command}")
        print(f"wrote {path}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DependencyError as exc:
        print(f"dependency error: {exc}", file=sys.stderr)
        return 4
    except FluxspotError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
