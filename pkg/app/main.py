"""Command-line entry point for carrier-phase positioning campaigns."""

import argparse
import dataclasses
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from core.campaign import (
    calibrate,
    export_results,
    run_campaign,
    run_validation,
    sweep,
    write_sweep,
)
from core.errors import (
    ConfigurationError,
    ExportError,
    NoSolvableUEsError,
    PositioningError,
)
from core.logging_config import setup_logging
from core.version_info import format_version_info
from settings.config import CampaignConfig, load_settings

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_NO_SOLVABLE = 3
EXIT_VALIDATION = 4

logger = logging.getLogger(__name__)


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="TOML campaign configuration file")
    parser.add_argument("--drops", type=int, help="Number of Monte-Carlo drops")
    parser.add_argument("--ues", type=int, help="Target UEs per drop")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument(
        "--scenario", choices=["los", "losnlos"], help="Propagation scenario"
    )
    parser.add_argument("--zeta", type=float, help="Wrong ambiguity fixing probability")
    parser.add_argument("--eta", type=int, help="Ambiguity search-space factor")
    parser.add_argument(
        "--magnitude-mode",
        choices=["cycles_times_ne", "cycles_times_eta"],
        help="How the error support N_t follows from eta",
    )
    parser.add_argument("--workers", type=int, help="Worker processes")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--format", choices=["csv", "json"], help="Export format")
    parser.add_argument("--log-level", help="Log level name")
    parser.add_argument("--log-dir", help="Directory for campaign.log")


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with its four subcommands."""
    parser = argparse.ArgumentParser(
        prog="cp-positioning",
        description="Carrier-phase positioning Monte-Carlo campaigns",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run a campaign and export results")
    _add_common_arguments(run)

    cal = commands.add_parser(
        "calibrate", help="Fit a noise parameter to a phase-error target"
    )
    _add_common_arguments(cal)
    cal.add_argument(
        "--target", type=float, help="Target 90th-percentile phase error (rad)"
    )
    cal.add_argument(
        "--param",
        choices=["sigma_los", "sigma_nlos", "nlos_excess_mean", "nlos_scale"],
        help="Fitted noise parameter (default: sigma_los or sigma_nlos)",
    )

    sw = commands.add_parser("sweep", help="Run one campaign per parameter value")
    _add_common_arguments(sw)
    sw.add_argument(
        "--param",
        required=True,
        choices=["zeta", "eta", "sigma_los", "sigma_nlos", "nlos_excess_mean"],
        help="Swept parameter",
    )
    sw.add_argument("--values", required=True, help="Comma-separated values")

    val = commands.add_parser(
        "validate", help="Run the property suite on small instances"
    )
    _add_common_arguments(val)
    return parser


def collect_overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Translate CLI flags into nested configuration overrides."""
    overrides: dict[str, Any] = {}
    flat = {
        "n_drops": args.drops,
        "ues_per_drop": args.ues,
        "master_seed": args.seed,
        "scenario": args.scenario,
        "workers": args.workers,
        "output_dir": args.out,
        "export_format": args.format,
        "log_level": args.log_level,
        "log_dir": args.log_dir,
    }
    overrides.update({k: v for k, v in flat.items() if v is not None})
    ambiguity = {
        "zeta": args.zeta,
        "eta": args.eta,
        "magnitude_mode": args.magnitude_mode,
    }
    ambiguity = {k: v for k, v in ambiguity.items() if v is not None}
    if ambiguity:
        overrides["ambiguity"] = ambiguity
    return overrides


def _parse_values(raw: str) -> list[float]:
    try:
        return [float(v) for v in raw.split(",") if v.strip()]
    except ValueError as e:
        msg = f"Sweep values must be numbers, got {raw!r}"
        raise ConfigurationError(msg) from e


def _run(config: CampaignConfig) -> int:
    stats = run_campaign(config)
    export_results(stats, config.output_dir, config.export_format)
    for metric, levels in stats.percentiles().items():
        summary = ", ".join(f"{k}={v:.4g}" for k, v in levels.items())
        logger.info("%s: %s", metric, summary)
    return EXIT_OK


def _calibrate(
    config: CampaignConfig,
    target: float | None,
    parameter: str | None,
) -> int:
    result = calibrate(
        config,
        target=target,
        parameter=parameter,  # type: ignore[arg-type]
    )
    print(f"{result.parameter} = {result.value:.5f} (p90 {result.achieved:.4f} rad)")
    for name, value in result.noise.items():
        print(f"  noise.{name} = {value:.6g}")
    out_dir = Path(config.output_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "calibration.json").write_text(
            json.dumps(dataclasses.asdict(result), indent=2) + "\n",
            encoding="utf-8",
        )
    except OSError as e:
        msg = f"Cannot write calibration result to {out_dir}: {e}"
        raise ExportError(msg) from e
    return EXIT_OK


def _sweep(config: CampaignConfig, param: str, raw_values: str) -> int:
    results = sweep(config, param, _parse_values(raw_values))  # type: ignore[arg-type]
    path = write_sweep(param, results, config.output_dir)
    print(f"Sweep written to {path}")
    return EXIT_OK


def _validate(config: CampaignConfig) -> int:
    results = run_validation(config)
    for result in results:
        print(f"{'PASS' if result.passed else 'FAIL'} {result.name}: {result.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run the chosen command, and return its exit code."""
    args = build_parser().parse_args(argv)
    try:
        config = load_settings(args.config, collect_overrides(args))
    except ConfigurationError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        setup_logging(config.log_level, config.log_dir)
    except OSError as e:
        print(f"Cannot open log directory {config.log_dir}: {e}", file=sys.stderr)
        return EXIT_IO
    logger.info("cp-positioning %s: %s", args.command, format_version_info())

    try:
        if args.command == "run":
            return _run(config)
        if args.command == "calibrate":
            return _calibrate(config, args.target, args.param)
        if args.command == "sweep":
            return _sweep(config, args.param, args.values)
        return _validate(config)
    except ConfigurationError:
        logger.exception("Configuration error")
        return EXIT_CONFIG
    except ExportError:
        logger.exception("Failed to write results")
        return EXIT_IO
    except NoSolvableUEsError:
        logger.exception("Campaign produced no solvable UE")
        return EXIT_NO_SOLVABLE
    except PositioningError:
        logger.exception("Campaign failed")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
