"""Result export: samples, summaries and CDF tables."""

import csv
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field

from core.campaign.statistics import METRICS, RunStatistics, empirical_cdf
from core.errors import ExportError

logger = logging.getLogger(__name__)

ExportFormat = Literal["csv", "json"]


class AmbiguitySummary(BaseModel):
    """Wrong-fixing tally of a run."""

    total_links: int
    corrupted_links: int
    empirical_zeta: float
    configured_zeta: float


class CampaignSummary(BaseModel):
    """JSON summary document of a campaign."""

    config: dict[str, Any] = Field(default_factory=dict)
    percentiles: dict[str, dict[str, float]] = Field(default_factory=dict)
    percentile_distances: dict[str, dict[str, float]] = Field(default_factory=dict)
    sample_counts: dict[str, int] = Field(default_factory=dict)
    ambiguity: AmbiguitySummary
    attempted_ues: int
    converged_ues: int
    convergence_rate: float
    exclusions: dict[str, int] = Field(default_factory=dict)

    @classmethod
    def from_statistics(cls, stats: RunStatistics) -> "CampaignSummary":
        return cls(
            config=stats.config_echo,
            percentiles=stats.percentiles(),
            percentile_distances=stats.phase_percentile_distances(),
            sample_counts={m: len(stats.samples(m)) for m in METRICS},
            ambiguity=AmbiguitySummary(
                total_links=stats.ambiguity_tally.total_links,
                corrupted_links=stats.ambiguity_tally.corrupted_links,
                empirical_zeta=stats.ambiguity_tally.empirical_zeta,
                configured_zeta=stats.configured_zeta,
            ),
            attempted_ues=stats.attempted,
            converged_ues=stats.converged,
            convergence_rate=stats.convergence_rate,
            exclusions=dict(sorted(stats.exclusions.items())),
        )


def _fmt(value: float) -> str:
    # repr round-trips every float exactly
    return repr(float(value))


def _write_rows(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _summary_rows(stats: RunStatistics) -> list[tuple[str, str, str]]:
    summary = CampaignSummary.from_statistics(stats)
    rows: list[tuple[str, str, str]] = []
    for metric, levels in summary.percentiles.items():
        rows.extend((metric, label, _fmt(value)) for label, value in levels.items())
    for metric, levels in summary.percentile_distances.items():
        rows.extend(
            (f"{metric}_distance", label, _fmt(value))
            for label, value in levels.items()
        )
    rows.extend(
        (metric, "count", str(count))
        for metric, count in summary.sample_counts.items()
    )
    rows.extend(
        [
            ("ambiguity", "total_links", str(summary.ambiguity.total_links)),
            ("ambiguity", "corrupted_links", str(summary.ambiguity.corrupted_links)),
            ("ambiguity", "empirical_zeta", _fmt(summary.ambiguity.empirical_zeta)),
            ("ambiguity", "configured_zeta", _fmt(summary.ambiguity.configured_zeta)),
            ("ues", "attempted", str(summary.attempted_ues)),
            ("ues", "converged", str(summary.converged_ues)),
            ("ues", "convergence_rate", _fmt(summary.convergence_rate)),
        ]
    )
    rows.extend(
        ("excluded", reason, str(count))
        for reason, count in summary.exclusions.items()
    )
    return rows


def write_cdfs(stats: RunStatistics, out_dir: Path) -> list[Path]:
    """Write one cdf_<metric>.csv per metric with samples."""
    written = []
    for metric in METRICS:
        values = stats.samples(metric)
        if not values:
            continue
        path = out_dir / f"cdf_{metric}.csv"
        _write_rows(
            path,
            ("error_value", "cumulative_probability"),
            ((_fmt(v), _fmt(p)) for v, p in empirical_cdf(values)),
        )
        written.append(path)
    return written


def export_results(
    stats: RunStatistics,
    path: str | Path,
    export_format: ExportFormat = "csv",
) -> list[Path]:
    """
    Export campaign statistics for plotting.

    CSV writes samples.csv and summary.csv; JSON writes summary.json. Both
    write the per-metric CDF tables.

    Args:
        stats: Pooled campaign statistics
        path: Output directory, created when missing
        export_format: "csv" or "json"

    Returns:
        Paths of all written files

    Raises:
        ExportError: If the directory or a file cannot be written
    """
    out_dir = Path(path)
    written: list[Path] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if export_format == "json":
            summary_path = out_dir / "summary.json"
            summary_path.write_text(
                CampaignSummary.from_statistics(stats).model_dump_json(indent=2) + "\n",
                encoding="utf-8",
            )
            written.append(summary_path)
        elif export_format == "csv":
            samples_path = out_dir / "samples.csv"
            _write_rows(
                samples_path,
                ("ue_id", "drop", "metric", "value"),
                ((r.ue_id, r.drop, r.metric, _fmt(r.value)) for r in stats.records),
            )
            summary_path = out_dir / "summary.csv"
            _write_rows(
                summary_path,
                ("metric", "statistic", "value"),
                _summary_rows(stats),
            )
            written.extend([samples_path, summary_path])
        else:
            msg = f"Unknown export format: {export_format}"
            raise ExportError(msg)
        written.extend(write_cdfs(stats, out_dir))
    except OSError as e:
        msg = f"Cannot write results to {out_dir}: {e}"
        raise ExportError(msg) from e

    logger.info("Exported %d files to %s", len(written), out_dir)
    return written


def load_summary(path: str | Path) -> CampaignSummary:
    """Parse a summary.json written by export_results."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
        return CampaignSummary.model_validate_json(raw)
    except OSError as e:
        msg = f"Cannot read summary {path}: {e}"
        raise ExportError(msg) from e
