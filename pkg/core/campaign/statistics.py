"""Pooled error samples, percentiles and tallies of a campaign."""

import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from core.ambiguity import AmbiguityOutcome
from core.errors import StatisticsError
from core.measurement import phase_error_to_distance
from settings.config import Wavelength

logger = logging.getLogger(__name__)

PERCENTILE_LEVELS: tuple[float, ...] = (0.5, 0.67, 0.8, 0.9)

# Position metrics in meters
POSITION_METRICS = ("horizontal", "vertical", "error_3d")
# Phase metrics in radians
PHASE_METRICS = ("dd_phase_error", "link_phase_error")
DOP_METRICS = ("hdop", "vdop")
METRICS = POSITION_METRICS + PHASE_METRICS + DOP_METRICS

EXCLUSION_REASONS = (
    "outside_hull",
    "insufficient_geometry",
    "ill_conditioned",
    "not_converged",
)


def percentile(samples: Sequence[float] | np.ndarray, p: float) -> float:
    """
    Empirical quantile with linear interpolation between order statistics.

    Args:
        samples: Non-empty sample values
        p: Probability level in (0, 1)

    Returns:
        The interpolated quantile

    Raises:
        StatisticsError: If samples are empty or p is outside (0, 1)
    """
    values = np.asarray(samples, dtype=float)
    if values.size == 0:
        msg = "Cannot compute a percentile of an empty sample"
        raise StatisticsError(msg)
    if not 0.0 < p < 1.0:
        msg = f"Percentile level must lie in (0, 1), got {p}"
        raise StatisticsError(msg)
    return float(np.quantile(np.sort(values), p, method="linear"))


def percentile_label(p: float) -> str:
    """Key of a percentile level, e.g. 0.9 -> 'p90'."""
    return f"p{round(p * 100)}"


def empirical_cdf(samples: Iterable[float]) -> list[tuple[float, float]]:
    """Sorted (value, i / n) pairs of the empirical step CDF."""
    values = sorted(samples)
    n = len(values)
    return [(v, (i + 1) / n) for i, v in enumerate(values)]


@dataclass(frozen=True, slots=True)
class SampleRecord:
    """One pooled metric value."""

    drop: int
    ue_id: int
    metric: str
    value: float


@dataclass(slots=True)
class DropResult:
    """Everything one drop contributes to the campaign statistics."""

    drop_index: int
    records: list[SampleRecord] = field(default_factory=list)
    ambiguity: AmbiguityOutcome = field(default_factory=AmbiguityOutcome)
    exclusions: Counter[str] = field(default_factory=Counter)
    attempted: int = 0
    converged: int = 0

    def add(self, ue_id: int, metric: str, value: float) -> None:
        self.records.append(SampleRecord(self.drop_index, ue_id, metric, float(value)))


@dataclass(slots=True)
class RunStatistics:
    """
    Pooled outcome of a campaign.

    Position and DOP samples come from converged in-hull UEs only; phase
    samples come from every in-hull UE.
    """

    records: list[SampleRecord] = field(default_factory=list)
    ambiguity_tally: AmbiguityOutcome = field(default_factory=AmbiguityOutcome)
    exclusions: dict[str, int] = field(
        default_factory=lambda: dict.fromkeys(EXCLUSION_REASONS, 0)
    )
    attempted: int = 0
    converged: int = 0
    configured_zeta: float = 0.0
    config_echo: dict[str, Any] = field(default_factory=dict)
    wavelength: Wavelength = field(default_factory=Wavelength)

    @classmethod
    def from_drops(
        cls,
        drops: Iterable[DropResult],
        *,
        configured_zeta: float = 0.0,
        config_echo: dict[str, Any] | None = None,
        wavelength: Wavelength | None = None,
    ) -> "RunStatistics":
        """Merge drop results in drop order."""
        stats = cls(
            configured_zeta=configured_zeta,
            config_echo=config_echo or {},
            wavelength=wavelength or Wavelength(),
        )
        for drop in sorted(drops, key=lambda d: d.drop_index):
            stats.records.extend(drop.records)
            stats.ambiguity_tally = stats.ambiguity_tally + drop.ambiguity
            for reason, count in drop.exclusions.items():
                stats.exclusions[reason] = stats.exclusions.get(reason, 0) + count
            stats.attempted += drop.attempted
            stats.converged += drop.converged
        return stats

    def samples(self, metric: str) -> list[float]:
        """All pooled values of one metric, in record order."""
        return [r.value for r in self.records if r.metric == metric]

    @property
    def convergence_rate(self) -> float:
        if self.attempted == 0:
            return 0.0
        return self.converged / self.attempted

    @property
    def excluded_ues(self) -> int:
        return sum(self.exclusions.values())

    def percentiles(self) -> dict[str, dict[str, float]]:
        """Percentile map per metric; metrics without samples are omitted."""
        result: dict[str, dict[str, float]] = {}
        for metric in METRICS:
            values = self.samples(metric)
            if not values:
                continue
            result[metric] = {
                percentile_label(p): percentile(values, p) for p in PERCENTILE_LEVELS
            }
        return result

    def phase_percentile_distances(self) -> dict[str, dict[str, float]]:
        """Phase-metric percentiles mapped to range errors in meters."""
        return {
            metric: {
                label: phase_error_to_distance(value, self.wavelength)
                for label, value in levels.items()
            }
            for metric, levels in self.percentiles().items()
            if metric in PHASE_METRICS
        }
