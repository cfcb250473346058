"""Command-line entry point: ``metroloop run|summarize|validate``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .qcore import ValidationError

logger = logging.getLogger("metroloop")

FIG2_DEFAULT_NS = (1, 2, 3, 4, 5)
FIG2_LONG_NS = (6, 7)


def _configs_from_args(args) -> list[harness.RunConfig]:
    if args.config:
        cfg = harness.RunConfig.load(args.config)
        overrides = {}
        if args.restarts is not None:
            overrides["restarts"] = args.restarts
        if args.output:
            overrides["output_path"] = args.output
        if overrides:
            data = cfg.to_dict()
            data.update(overrides)
            cfg = harness.RunConfig.from_dict(data)
        return [cfg]

    restarts = args.restarts if args.restarts is not None else 5
    if args.preset == "fig3":
        cfgs = [harness.fig3_preset(restarts=restarts, seed=args.seed,
                                    output_path=args.output or "runs/fig3")]
    else:
        if args.n is not None:
            ns = [args.n]
        else:
            ns = list(FIG2_DEFAULT_NS) + (list(FIG2_LONG_NS) if args.long else [])
        base = args.output or "runs"
        cfgs = [harness.fig2_preset(n, restarts=restarts, seed=args.seed,
                                    output_path=str(Path(base) / f"fig2_n{n}"))
                for n in ns]
    if args.sampled:
        out = []
        for cfg in cfgs:
            data = cfg.to_dict()
            data["fitness_mode"] = "sampled"
            data["shots_per_term"] = args.shots
            data["noise"] = {"p": args.p, "applications": data["noise"]["applications"]}
            out.append(harness.RunConfig.from_dict(data))
        cfgs = out
    return cfgs


def cmd_run(args) -> int:
    try:
        configs = _configs_from_args(args)
    except (ValidationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    all_ok = True
    all_records = []
    for cfg in configs:
        records, ok = harness.run_experiment(cfg)
        all_ok &= ok
        all_records.extend(records)
        print(f"wrote {len(records)} record(s) to {cfg.output_path}")
    if all_records:
        print(harness.format_summary(harness.summarize(all_records)))
    return 0 if all_ok else 1


def cmd_summarize(args) -> int:
    try:
        records = [harness.LearningRunRecord.read(p) for p in args.records]
        rows = harness.summarize(records)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(harness.format_summary(rows))
    if args.output:
        harness.write_summary(args.output, rows)
    return 0


def cmd_validate(args) -> int:
    from .validate import run_suite

    results = run_suite(args.suite)
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
    return 0 if all(p for _, p, _ in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metroloop", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run closed-loop learning")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON run configuration")
    src.add_argument("--preset", choices=("fig2", "fig3"))
    run.add_argument("--n", type=int, help="fig2: a single qubit count")
    run.add_argument("--long", action="store_true", help="fig2: include N = 6, 7")
    run.add_argument("--restarts", type=int)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--sampled", action="store_true", help="SWAP-test sampled fitness")
    run.add_argument("--shots", type=int, default=1000)
    run.add_argument("--p", type=float, default=0.0, help="ancilla dephasing strength")
    run.add_argument("--output", help="output directory")
    run.set_defaults(func=cmd_run)

    summ = sub.add_parser("summarize", help="summarize record files")
    summ.add_argument("records", nargs="+")
    summ.add_argument("--output", help="write the summary JSON here")
    summ.set_defaults(func=cmd_summarize)

    val = sub.add_parser("validate", help="run a built-in check suite")
    val.add_argument("--suite", choices=("invariants",), default="invariants")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
