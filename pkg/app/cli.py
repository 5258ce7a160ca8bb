# app/cli.py
"""
Command line front end.

    python -m app.cli rates
    python -m app.cli spam --method transmission --trials 100000
    python -m app.cli sweep --set sweep.parameter=tau --set "sweep.values=[10,25,50,100]"
    python -m app.cli ramsey --set ramsey.distance_um=46.0 --method transmission
    python -m app.cli serve --port 10000

Exit codes: 0 success, 2 config error, 3 non-convergence, 4 I/O error.
"""

import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional

from app.constants import Method
from app.errors import ConfigError, NonConvergenceError, OutputError
from app.harness import runner
from app.harness.settings import load_run_config
from app.logger import log

COMMANDS = ("rates", "histogram", "spam", "sweep", "ramsey")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavity-readout",
        description="Cavity-assisted mid-circuit readout simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="JSON config (default: configs/defaults.json)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--trials", type=int, default=None, help="trials per prepared state / sweep point")
    common.add_argument("--out", type=str, default=None, help="output directory")
    common.add_argument("--method", choices=[m.value for m in Method], default=None)
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    common.add_argument("--workers", type=int, default=None)

    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "spam":
            p.add_argument("--counts", type=Path, default=None, help="CSV of measured count pairs")

    serve = sub.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--host", default="0.0.0.0")
    serve.add_argument("--port", type=int, default=int(os.getenv("PORT", 10000)))
    return parser


def _print_table(rows, header=None):
    if header:
        print(",".join(header))
    for row in rows:
        print(",".join("" if v is None else str(v) for v in row))


def run(args: argparse.Namespace) -> int:
    if args.command == "serve":
        import uvicorn

        uvicorn.run("app.main:app", host=args.host, port=args.port, log_level="info")
        return 0

    config = load_run_config(
        args.config,
        overrides=args.overrides,
        method=args.method,
        seed=args.seed,
        trials=args.trials,
        output_dir=args.out,
        workers=args.workers,
    )

    if args.command == "rates":
        table, _ = runner.cmd_rates(config)
        _print_table(table.items(), ["quantity", "value"])
    elif args.command == "histogram":
        _, result = runner.cmd_histogram(config)
        print(result.manifest)
    elif args.command == "spam":
        report, _ = runner.cmd_spam(config, args.counts)
        _print_table(
            runner.spam_rows(report),
            ["prepared", "trials", "infidelity", "infidelity_low", "infidelity_high", "loss", "loss_low", "loss_high"],
        )
    elif args.command == "sweep":
        _, result = runner.cmd_sweep(config)
        print(result.files[0])
    elif args.command == "ramsey":
        ramsey, _ = runner.cmd_ramsey(config)
        _print_table(
            [("contrast", ramsey.contrast), ("normalized_contrast", ramsey.normalized_contrast)],
            ["quantity", "value"],
        )
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (ConfigError, NonConvergenceError, OutputError) as e:
        log(f"{type(e).__name__}: {e}", "ERROR")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
