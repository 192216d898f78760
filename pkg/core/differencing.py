"""Single and double differencing of carrier-phase measurement sets."""

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

from core.errors import InsufficientGeometryError, MeasurementError
from core.geometry import GnbNode, Position3D, UeNode, distance
from core.measurement import MeasurementSet
from settings.config import FilterPolicy, Wavelength

logger = logging.getLogger(__name__)

MIN_DOUBLE_DIFFS = 3
MIN_MEASUREMENTS = MIN_DOUBLE_DIFFS + 1


@dataclass(frozen=True, slots=True)
class SingleDiff:
    """Neighbor-minus-serving phase difference at one UE; free of b_m."""

    ue_id: int
    neighbor_gnb_id: int
    serving_gnb_id: int
    value: float
    true_delta_distance: float


@dataclass(frozen=True, slots=True)
class DoubleDiff:
    """Target-minus-reference single difference; free of all clock biases."""

    target_ue_id: int
    reference_ue_id: int
    neighbor_gnb_id: int
    serving_gnb_id: int
    value: float
    reference_delta_distance: float
    # True geometric double difference, kept for error statistics only
    geometric_value: float


@dataclass(frozen=True, slots=True)
class DoubleDiffSet:
    """Double differences of one target UE against one reference UE."""

    target_ue_id: int
    serving_gnb_id: int
    reference_ue_id: int
    diffs: tuple[DoubleDiff, ...]
    gnb_positions: Mapping[int, Position3D] = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.diffs) < MIN_DOUBLE_DIFFS:
            msg = (
                f"UE {self.target_ue_id} has {len(self.diffs)} double differences, "
                f"at least {MIN_DOUBLE_DIFFS} are needed"
            )
            raise InsufficientGeometryError(msg)
        for dd in self.diffs:
            if (
                dd.serving_gnb_id != self.serving_gnb_id
                or dd.reference_ue_id != self.reference_ue_id
            ):
                msg = (
                    "All double differences must share the serving gNB "
                    "and reference UE"
                )
                raise MeasurementError(msg)
        missing = {self.serving_gnb_id, *(dd.neighbor_gnb_id for dd in self.diffs)}
        missing -= set(self.gnb_positions)
        if missing:
            msg = f"Missing positions for gNBs {sorted(missing)}"
            raise MeasurementError(msg)

    @property
    def neighbor_ids(self) -> list[int]:
        return [dd.neighbor_gnb_id for dd in self.diffs]


def single_difference(measurements: MeasurementSet) -> list[SingleDiff]:
    """
    Difference every neighbor phase against the serving-gNB phase.

    Args:
        measurements: Measurement set holding the serving link

    Returns:
        One single difference per neighbor gNB, in set order
    """
    serving = measurements.serving
    return [
        SingleDiff(
            ue_id=measurements.ue_id,
            neighbor_gnb_id=m.gnb_id,
            serving_gnb_id=serving.gnb_id,
            value=m.resolved_phase - serving.resolved_phase,
            true_delta_distance=m.true_distance - serving.true_distance,
        )
        for m in measurements.measurements
        if m.gnb_id != serving.gnb_id
    ]


def rebase(measurements: MeasurementSet, serving_gnb_id: int) -> MeasurementSet:
    """Re-express a measurement set against another gNB it has measured."""
    if serving_gnb_id not in measurements.by_gnb:
        msg = (
            f"UE {measurements.ue_id} has no measurement of gNB {serving_gnb_id} "
            "to difference against"
        )
        raise MeasurementError(msg)
    return MeasurementSet(
        ue_id=measurements.ue_id,
        measurements=measurements.measurements,
        serving_gnb_id=serving_gnb_id,
    )


def double_difference(
    target: Sequence[SingleDiff],
    reference: Sequence[SingleDiff],
    *,
    gnb_positions: Mapping[int, Position3D],
) -> DoubleDiffSet:
    """
    Difference target single differences against a reference UE's.

    Args:
        target: Single differences of the target UE
        reference: Single differences of the reference UE on the same serving gNB
        gnb_positions: Positions of every involved gNB

    Returns:
        Double differences over the neighbors common to both UEs

    Raises:
        InsufficientGeometryError: If fewer than three neighbors are common
        MeasurementError: If the two UEs difference against different gNBs
    """
    if not target or not reference:
        msg = "Double differencing needs single differences from both UEs"
        raise InsufficientGeometryError(msg)
    serving_ids = {sd.serving_gnb_id for sd in (*target, *reference)}
    if len(serving_ids) != 1:
        msg = f"Target and reference are differenced against gNBs {sorted(serving_ids)}"
        raise MeasurementError(msg)

    by_neighbor = {sd.neighbor_gnb_id: sd for sd in reference}
    reference_ue_id = reference[0].ue_id
    diffs = tuple(
        DoubleDiff(
            target_ue_id=sd.ue_id,
            reference_ue_id=reference_ue_id,
            neighbor_gnb_id=sd.neighbor_gnb_id,
            serving_gnb_id=sd.serving_gnb_id,
            value=sd.value - ref.value,
            reference_delta_distance=ref.true_delta_distance,
            geometric_value=sd.true_delta_distance - ref.true_delta_distance,
        )
        for sd in target
        if (ref := by_neighbor.get(sd.neighbor_gnb_id)) is not None
    )
    return DoubleDiffSet(
        target_ue_id=target[0].ue_id,
        serving_gnb_id=serving_ids.pop(),
        reference_ue_id=reference_ue_id,
        diffs=diffs,
        gnb_positions=dict(gnb_positions),
    )


def filter_measurements(
    measurements: MeasurementSet,
    policy: FilterPolicy,
) -> MeasurementSet:
    """
    Keep the serving link and the best neighbor links.

    Neighbors are ranked LOS first, then by distance, then by gNB id; at most
    ``policy.max_links`` survive. The output keeps the input order.

    Raises:
        InsufficientGeometryError: If fewer than four measurements remain
    """
    serving_id = measurements.serving_gnb_id
    neighbors = [m for m in measurements.measurements if m.gnb_id != serving_id]
    if policy.los_only:
        neighbors = [m for m in neighbors if m.los]
    ranked = sorted(neighbors, key=lambda m: (not m.los, m.true_distance, m.gnb_id))
    keep = {m.gnb_id for m in ranked[: policy.max_links]} | {serving_id}

    kept = tuple(m for m in measurements.measurements if m.gnb_id in keep)
    if len(kept) < MIN_MEASUREMENTS:
        msg = (
            f"Filtering left UE {measurements.ue_id} with {len(kept)} "
            f"measurements, at least {MIN_MEASUREMENTS} are needed"
        )
        raise InsufficientGeometryError(msg)
    return MeasurementSet(
        ue_id=measurements.ue_id,
        measurements=kept,
        serving_gnb_id=serving_id,
    )


def select_reference(serving: GnbNode, reference_ues: Sequence[UeNode]) -> UeNode:
    """Reference UE nearest to the serving gNB, lowest id on ties."""
    if not reference_ues:
        msg = "No reference UE is deployed"
        raise InsufficientGeometryError(msg)
    return min(
        reference_ues,
        key=lambda ue: (distance(serving.position, ue.position), ue.id),
    )


def form_double_differences(
    target: MeasurementSet,
    reference: MeasurementSet,
    gnb_positions: Mapping[int, Position3D],
) -> DoubleDiffSet:
    """Rebase the reference set on the target's serving gNB and double-difference."""
    rebased = rebase(reference, target.serving_gnb_id)
    return double_difference(
        single_difference(target),
        single_difference(rebased),
        gnb_positions=gnb_positions,
    )


def double_diff_phase_error(dd: DoubleDiff, wavelength: Wavelength) -> float:
    """Absolute error of a double-differenced phase against its geometry (rad)."""
    return abs(dd.value - 2.0 * math.pi * dd.geometric_value / wavelength.meters)
