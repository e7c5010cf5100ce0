"""``dyson-edge <command> --config <file> [--out <dir>] [--parallelism <p>] [--seed <s>]``.

Exit codes: 0 success, 1 a statistical test (or a unit) failed, 2 usage or
configuration error, 3 numerical error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .batch import EXIT_NUMERICAL, EXIT_OK, EXIT_TEST_FAILURE, EXIT_USAGE, batch_run
from .errors import ConfigError, DysonEdgeError, NumericalError
from .io import COMMANDS, parse_config


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dyson-edge", description="Edge spacings of Hermite beta corners processes.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON configuration (for 'report': a manifest.json)")
    parser.add_argument("--out", default="dyson_edge_output", help="output directory (default: %(default)s)")
    parser.add_argument("--parallelism", type=int, default=None, help="worker threads; results do not depend on it")
    parser.add_argument("--seed", type=int, default=None, help="override the configuration's master seed")
    return parser


def _print_report_rows(rows, out):
    for row in rows:
        status = "PASS" if row.get("passed") else "FAIL"
        print(
            f"{status} [{row.get('criterion', '-')}] {row['name']}: "
            f"statistic={row['statistic']:.6g} threshold={row['threshold']:.6g}",
            file=out,
        )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.parallelism is not None and args.parallelism < 1:
            raise ConfigError(f"--parallelism must be >= 1, got {args.parallelism}")
        if args.seed is not None and args.seed < 0:
            raise ConfigError(f"--seed must be >= 0, got {args.seed}")
        if args.command == "report":
            manifest, (bad, rows) = batch_run("report", Path(args.config))
            for name in bad:
                print(f"HASH MISMATCH {name}", file=sys.stderr)
            _print_report_rows(rows, sys.stdout)
            return manifest.exit_code
        config = parse_config(args.config, args.command)
        if args.seed is not None:
            config = config.with_seed(args.seed)
        parallelism = args.parallelism
        if parallelism is None:
            parallelism = int(config.suite.get("parallelism", 1)) if config.suite is not None else 1
        manifest, reports = batch_run(args.command, config, parallelism, args.out)
    except ConfigError as exc:
        print(f"dyson-edge: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"dyson-edge: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DysonEdgeError as exc:
        print(f"dyson-edge: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if reports is not None:
        for report in reports:
            print(report.line())
    for failure in manifest.failures:
        print(f"unit {failure['unit']}: {failure['error']}: {failure['message']}", file=sys.stderr)
    print(f"wrote {len(manifest.outputs)} file(s) to {args.out}", file=sys.stderr)
    return manifest.exit_code if manifest.exit_code in (EXIT_OK, EXIT_TEST_FAILURE, EXIT_NUMERICAL) else EXIT_TEST_FAILURE


if __name__ == "__main__":
    sys.exit(main())
