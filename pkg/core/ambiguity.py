"""Integer-ambiguity resolution and wrong-fixing error model."""

import dataclasses
import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from core.measurement import MeasurementSet, PhaseMeasurement
from settings.config import AmbiguityModel, MagnitudeMode, Wavelength

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class AmbiguityOutcome:
    """Counts of wrongly fixed links over a run."""

    total_links: int = 0
    corrupted_links: int = 0
    # Cycle errors of the corrupted links only
    per_link_error: tuple[int, ...] = ()

    @property
    def empirical_zeta(self) -> float:
        """Observed wrong-fixing rate E / T."""
        if self.total_links == 0:
            return 0.0
        return self.corrupted_links / self.total_links

    def __add__(self, other: "AmbiguityOutcome") -> "AmbiguityOutcome":
        return AmbiguityOutcome(
            total_links=self.total_links + other.total_links,
            corrupted_links=self.corrupted_links + other.corrupted_links,
            per_link_error=self.per_link_error + other.per_link_error,
        )


def resolve_ideal(m: PhaseMeasurement, wavelength: Wavelength) -> float:
    """
    Range observable with the true whole-cycle count restored.

    Returns:
        d + c (b_m - b_i) + noise, in meters
    """
    lam = wavelength.meters
    return lam * m.phi / (2.0 * math.pi) + lam * m.integer_ambiguity


def resolve_fixed(m: PhaseMeasurement, wavelength: Wavelength) -> float:
    """Range observable with the fixed (possibly wrong) cycle count."""
    return wavelength.meters * m.resolved_phase / (2.0 * math.pi)


def search_space(m: PhaseMeasurement, model: AmbiguityModel) -> int:
    """Half-width N_t of the wrong-fixing error support in cycles."""
    if model.magnitude_mode is MagnitudeMode.CYCLES_TIMES_ETA:
        return model.eta
    return model.eta * max(m.integer_ambiguity, 1)


def inject_ambiguity_error(
    m: PhaseMeasurement,
    model: AmbiguityModel,
    rng: np.random.Generator,
) -> PhaseMeasurement:
    """
    Corrupt the cycle count of a link with probability zeta.

    Three uniforms are drawn per link whatever the outcome, so under one seed
    the links corrupted at a lower zeta stay corrupted, with the same error,
    at any higher zeta.

    Returns:
        The measurement, with a nonzero error drawn uniformly from
        [-N_t, N_t] added to its fixed cycles when corrupted
    """
    u, magnitude_u, sign_u = rng.random(3)
    if u >= model.zeta:
        return m
    n_t = search_space(m, model)
    sign = 1 if sign_u < 0.5 else -1  # noqa: PLR2004
    error = (1 + math.floor(magnitude_u * n_t)) * sign
    return dataclasses.replace(m, ambiguity_error=m.ambiguity_error + error)


def corrupt_set(
    measurements: MeasurementSet,
    model: AmbiguityModel,
    rng: np.random.Generator,
) -> MeasurementSet:
    """Apply the wrong-fixing model to every link of a measurement set."""
    return MeasurementSet(
        ue_id=measurements.ue_id,
        measurements=tuple(
            inject_ambiguity_error(m, model, rng) for m in measurements.measurements
        ),
        serving_gnb_id=measurements.serving_gnb_id,
    )


def tally(measurements: Iterable[PhaseMeasurement]) -> AmbiguityOutcome:
    """Count total and wrongly fixed links."""
    total = 0
    errors: list[int] = []
    for m in measurements:
        total += 1
        if m.ambiguity_error != 0:
            errors.append(m.ambiguity_error)
    return AmbiguityOutcome(
        total_links=total,
        corrupted_links=len(errors),
        per_link_error=tuple(errors),
    )
