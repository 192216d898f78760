"""Carrier-phase measurement synthesis and phase/distance conversions."""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import speed_of_light

from core.errors import MeasurementError
from core.geometry import GnbNode, UeNode, distance, horizontal_distance
from settings.config import NoiseModel, Wavelength

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, slots=True)
class PhaseMeasurement:
    """
    One gNB -> UE carrier-phase observable.

    ``phi`` is the observable with the true whole-cycle count removed, so
    (lambda / 2pi) * phi = d + clock_offset + noise_draw - lambda * N with
    N = ``integer_ambiguity`` = floor(d / lambda). A wrong fixing adds
    ``ambiguity_error`` cycles on top of N at resolution time.
    """

    gnb_id: int
    ue_id: int
    phi: float
    true_distance: float
    los: bool
    integer_ambiguity: int
    noise_draw: float
    clock_offset: float
    ambiguity_error: int = 0

    @property
    def resolved_phase(self) -> float:
        """Unwrapped phase after fixing the integer ambiguity (radians)."""
        return self.phi + TWO_PI * self.fixed_cycles

    @property
    def fixed_cycles(self) -> int:
        """Whole cycles applied at resolution, errors included."""
        return self.integer_ambiguity + self.ambiguity_error


@dataclass(frozen=True, slots=True)
class MeasurementSet:
    """All measurements one UE collected in a drop."""

    ue_id: int
    measurements: tuple[PhaseMeasurement, ...]
    serving_gnb_id: int
    by_gnb: dict[int, PhaseMeasurement] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "by_gnb", {m.gnb_id: m for m in self.measurements})
        if self.serving_gnb_id not in self.by_gnb:
            msg = (
                f"Measurement set of UE {self.ue_id} lacks the serving gNB "
                f"{self.serving_gnb_id}"
            )
            raise MeasurementError(msg)

    @property
    def serving(self) -> PhaseMeasurement:
        """Measurement of the serving link."""
        return self.by_gnb[self.serving_gnb_id]

    def __len__(self) -> int:
        return len(self.measurements)


def true_phase(d: float, wavelength: Wavelength) -> float:
    """Unwrapped geometric phase 2pi d / lambda in radians."""
    if d < 0:
        msg = f"Distance must be non-negative, got {d}"
        raise MeasurementError(msg)
    return TWO_PI * d / wavelength.meters


def phase_error_to_distance(delta: float, wavelength: Wavelength) -> float:
    """Map a phase error in radians to the equivalent range error in meters."""
    if delta < 0:
        msg = f"Phase error must be non-negative, got {delta}"
        raise MeasurementError(msg)
    return wavelength.meters * delta / TWO_PI


def link_phase_error(m: PhaseMeasurement, wavelength: Wavelength) -> float:
    """Absolute direct (undifferenced) phase error of a link in radians."""
    return abs(m.noise_draw) * TWO_PI / wavelength.meters


def _los_from_uniform(u: float, d2d: float, model: NoiseModel) -> bool:
    if not model.nlos_enabled:
        return True
    return u < math.exp(-d2d / model.los_probability_k)


def los_state(d2d: float, model: NoiseModel, rng: np.random.Generator) -> bool:
    """
    Draw the LOS state of a link.

    Args:
        d2d: Horizontal gNB-UE distance in meters
        model: Noise model holding the LOS probability scale
        rng: Random generator; one uniform variate is consumed

    Returns:
        True for LOS, drawn with probability exp(-d2d / k)
    """
    return _los_from_uniform(float(rng.random()), d2d, model)


def synthesize_measurement(
    gnb: GnbNode,
    ue: UeNode,
    wavelength: Wavelength,
    model: NoiseModel,
    rng: np.random.Generator,
) -> PhaseMeasurement:
    """
    Synthesize one carrier-phase observable.

    Exactly three variates are drawn per link (uniform, standard normal,
    standard exponential) regardless of the LOS outcome.
    """
    lam = wavelength.meters
    d = distance(gnb.position, ue.position)
    u = float(rng.random())
    z = float(rng.standard_normal())
    e = float(rng.standard_exponential())

    los = _los_from_uniform(u, horizontal_distance(gnb.position, ue.position), model)
    if los:
        noise = lam * model.sigma_los * z / TWO_PI
    else:
        noise = lam * model.sigma_nlos * z / TWO_PI + model.nlos_excess_mean * e

    cycles = math.floor(d / lam)
    clock_offset = speed_of_light * (ue.clock_bias - gnb.clock_bias)
    phi = ((d - lam * cycles) + clock_offset + noise) * (TWO_PI / lam)
    return PhaseMeasurement(
        gnb_id=gnb.id,
        ue_id=ue.id,
        phi=phi,
        true_distance=d,
        los=los,
        integer_ambiguity=cycles,
        noise_draw=noise,
        clock_offset=clock_offset,
    )


def synthesize_set(
    ue: UeNode,
    gnbs: Sequence[GnbNode],
    wavelength: Wavelength,
    model: NoiseModel,
    rng: np.random.Generator,
) -> MeasurementSet:
    """Synthesize the measurements of one UE from every gNB, in gNB order."""
    measurements = tuple(
        synthesize_measurement(gnb, ue, wavelength, model, rng) for gnb in gnbs
    )
    return MeasurementSet(
        ue_id=ue.id,
        measurements=measurements,
        serving_gnb_id=ue.serving_gnb,
    )
