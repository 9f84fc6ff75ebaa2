"""Command line interface: nctheta <suite> --config <path> [...]."""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import ConfigInvalid, ConfigSyntax, NCThetaError
from .report import SUITE_NAMES, run_suite, write_report

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nctheta",
        description="Numerical verification of quantum theta identities on"
                    " the noncommutative 4-torus.")
    parser.add_argument("suite", choices=list(SUITE_NAMES) + ["all"],
                        help="which verification suite to run")
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--radius", type=int, help="override truncation radius")
    parser.add_argument("--tol-oracle", type=float,
                        help="override the oracle relative tolerance")
    parser.add_argument("--seed", type=int, help="override the RNG seed")
    parser.add_argument("--output", help="report path (overrides config)")
    parser.add_argument("--format", choices=["json", "csv"],
                        help="report format (overrides config)")
    parser.add_argument("--allow-invalid", action="store_true",
                        help="keep going when the embedding column condition"
                             " fails; phases are then computed in full")
    return parser


def _apply_overrides(cfg, args):
    from dataclasses import replace

    if args.radius is not None:
        cfg = replace(cfg, radius=args.radius)
    if args.tol_oracle is not None:
        tol = dict(cfg.tolerances)
        tol["oracle_rel"] = args.tol_oracle
        cfg = replace(cfg, tolerances=tol)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    output = dict(cfg.output) if cfg.output else {}
    if args.output is not None:
        output["path"] = args.output
    if args.format is not None:
        output["format"] = args.format
    if output:
        output.setdefault("format", "json")
        if "path" not in output:
            raise ConfigInvalid("an output path is required (config output.path"
                                " or --output)", "$.output.path")
        cfg = replace(cfg, output=output)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, allow_invalid=args.allow_invalid)
        cfg = _apply_overrides(cfg, args)
        report = run_suite(cfg, args.suite)
    except (ConfigSyntax, ConfigInvalid) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except NCThetaError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO_ERROR

    summary = report.summary()
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: max residual {check.max_residual:.3e}"
              f" (tolerance {check.tolerance:.3e})")
    print(f"{summary['checks']} checks, {summary['failed']} failed,"
          f" elapsed {report.elapsed_seconds:.2f}s")

    if cfg.output is not None:
        try:
            path = write_report(report, cfg.output["path"],
                                cfg.output.get("format", "json"))
        except OSError as err:
            print(f"i/o error: {err}", file=sys.stderr)
            return EXIT_IO_ERROR
        print(f"report written to {path}")

    return EXIT_PASS if report.passed else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
