"""Noise calibration against a target phase-error percentile, and parameter sweeps."""

import csv
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

from scipy.optimize import brentq

from core.campaign.runner import run_campaign
from core.campaign.statistics import METRICS, RunStatistics, percentile
from core.errors import ConfigurationError, ExportError, StatisticsError
from settings.config import CampaignConfig, Scenario, apply_overrides

logger = logging.getLogger(__name__)

# Targets of the 90th-percentile double-differenced phase error (rad)
DEFAULT_TARGETS = {Scenario.LOS_ONLY: 1.4, Scenario.LOS_NLOS: 3.4}

CalibrationParameter = Literal[
    "sigma_los", "sigma_nlos", "nlos_excess_mean", "nlos_scale"
]
DEFAULT_BRACKETS: dict[str, tuple[float, float]] = {
    "sigma_los": (0.01, 2.0),
    "sigma_nlos": (0.0, 6.0),
    "nlos_excess_mean": (0.0, 0.08),
    # common factor on sigma_nlos and nlos_excess_mean
    "nlos_scale": (0.0, 4.0),
}
NLOS_PARAMETERS = frozenset({"sigma_nlos", "nlos_excess_mean", "nlos_scale"})

SweepParameter = Literal["zeta", "eta", "sigma_los", "sigma_nlos", "nlos_excess_mean"]
SWEEP_PATHS: dict[str, tuple[str, str]] = {
    "zeta": ("ambiguity", "zeta"),
    "eta": ("ambiguity", "eta"),
    "sigma_los": ("noise", "sigma_los"),
    "sigma_nlos": ("noise", "sigma_nlos"),
    "nlos_excess_mean": ("noise", "nlos_excess_mean"),
}


@dataclass(frozen=True, slots=True)
class CalibrationResult:
    """Fitted noise parameter, the percentile it achieves and the fitted noise."""

    parameter: str
    value: float
    target: float
    achieved: float
    evaluations: int
    noise: dict[str, float] = field(default_factory=dict)


def _override(config: CampaignConfig, parameter: str, value: float) -> CampaignConfig:
    if parameter == "nlos_scale":
        noise = config.noise
        scaled = {
            "sigma_nlos": noise.sigma_nlos * value,
            "nlos_excess_mean": noise.nlos_excess_mean * value,
        }
        return apply_overrides(config, {"noise": scaled})
    section, name = SWEEP_PATHS[parameter]
    return apply_overrides(config, {section: {name: value}})


def phase_percentile(config: CampaignConfig, level: float = 0.9) -> float:
    """Percentile of the double-differenced phase error of a campaign."""
    stats = run_campaign(config, estimate_positions=False)
    return percentile(stats.samples("dd_phase_error"), level)


def calibrate(
    config: CampaignConfig,
    target: float | None = None,
    parameter: CalibrationParameter | None = None,
    bracket: tuple[float, float] | None = None,
    xtol: float | None = None,
) -> CalibrationResult:
    """
    Fit one noise parameter so the 90th-percentile phase error hits a target.

    By default the LOS scenario fits sigma_los and the mixed scenario fits
    sigma_nlos. `nlos_scale` multiplies sigma_nlos and nlos_excess_mean by one
    factor, so the NLOS tail is refitted while keeping its split between
    Gaussian noise and excess path. All evaluations reuse the configured seed,
    so the objective is a smooth function of the parameter.

    Raises:
        ConfigurationError: If an NLOS parameter is fitted on the LOS scenario
        StatisticsError: If the target is not bracketed
    """
    los_only = config.scenario is Scenario.LOS_ONLY
    if parameter is None:
        parameter = "sigma_los" if los_only else "sigma_nlos"
    if parameter not in DEFAULT_BRACKETS:
        msg = f"Unknown calibration parameter: {parameter}"
        raise ConfigurationError(msg)
    if los_only and parameter in NLOS_PARAMETERS:
        msg = f"{parameter} has no effect in the LOS scenario"
        raise ConfigurationError(msg)
    target = DEFAULT_TARGETS[config.scenario] if target is None else target
    low, high = bracket or DEFAULT_BRACKETS[parameter]
    evaluations = 0

    def objective(value: float) -> float:
        nonlocal evaluations
        evaluations += 1
        p90 = phase_percentile(_override(config, parameter, value))
        logger.info(
            "Calibration %s=%.5f -> p90 phase error %.4f rad", parameter, value, p90
        )
        return p90 - target

    f_low, f_high = objective(low), objective(high)
    if f_low * f_high > 0:
        msg = (
            f"Target {target} rad is not bracketed by {parameter} in [{low}, {high}] "
            f"(p90 spans {f_low + target:.3f} to {f_high + target:.3f})"
        )
        raise StatisticsError(msg)
    tolerance = 5e-4 * (high - low) if xtol is None else xtol
    value = float(brentq(objective, low, high, xtol=tolerance))
    fitted = _override(config, parameter, value)
    achieved = phase_percentile(fitted)
    logger.info(
        "Calibrated %s=%.5f (target %.3f, achieved %.4f)",
        parameter,
        value,
        target,
        achieved,
    )
    return CalibrationResult(
        parameter=parameter,
        value=value,
        target=target,
        achieved=achieved,
        evaluations=evaluations + 1,
        noise={
            "sigma_los": fitted.noise.sigma_los,
            "sigma_nlos": fitted.noise.sigma_nlos,
            "nlos_excess_mean": fitted.noise.nlos_excess_mean,
        },
    )


def sweep(
    config: CampaignConfig,
    parameter: SweepParameter,
    values: Sequence[float],
) -> list[tuple[float, RunStatistics]]:
    """Run one campaign per parameter value under the same seed."""
    if parameter not in SWEEP_PATHS:
        msg = f"Unknown sweep parameter: {parameter}"
        raise StatisticsError(msg)
    results = []
    for value in values:
        logger.info("Sweep %s=%s", parameter, value)
        results.append((value, run_campaign(_override(config, parameter, value))))
    return results


def sweep_rows(
    parameter: str,
    results: Sequence[tuple[float, RunStatistics]],
) -> list[dict[str, Any]]:
    """Flatten sweep results into one row per value with 90th percentiles."""
    rows = []
    for value, stats in results:
        percentiles = stats.percentiles()
        row: dict[str, Any] = {"parameter": parameter, "value": value}
        for metric in METRICS:
            row[f"{metric}_p90"] = percentiles.get(metric, {}).get("p90")
        row["empirical_zeta"] = stats.ambiguity_tally.empirical_zeta
        row["convergence_rate"] = stats.convergence_rate
        rows.append(row)
    return rows


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_sweep(
    parameter: str,
    results: Sequence[tuple[float, RunStatistics]],
    out_dir: str | Path,
) -> Path:
    """Write sweep.csv into the output directory."""
    rows = sweep_rows(parameter, results)
    path = Path(out_dir) / "sweep.csv"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            fieldnames = list(rows[0]) if rows else ["parameter"]
            writer = csv.DictWriter(fh, fieldnames=fieldnames)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _cell(v) for k, v in row.items()})
    except OSError as e:
        msg = f"Cannot write sweep results to {path}: {e}"
        raise ExportError(msg) from e
    return path
