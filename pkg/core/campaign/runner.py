"""Monte-Carlo campaign driver: layout, measurements, differencing, solve."""

import logging
import time
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Any

from core.ambiguity import corrupt_set, tally
from core.campaign.statistics import DropResult, RunStatistics
from core.differencing import (
    double_diff_phase_error,
    filter_measurements,
    form_double_differences,
    select_reference,
)
from core.errors import (
    IllConditionedGeometryError,
    InsufficientGeometryError,
    NoSolvableUEsError,
    SingularGeometryError,
)
from core.estimator import solve
from core.geometry import GnbHull, GnbNode, UeNode, generate_layout
from core.measurement import MeasurementSet, link_phase_error, synthesize_set
from core.seeding import Stream, child_rng, child_seed
from settings.config import CampaignConfig

logger = logging.getLogger(__name__)

# Execution and output fields never change results
NON_RESULT_FIELDS = {"workers", "output_dir", "export_format", "log_level", "log_dir"}


def config_echo(config: CampaignConfig) -> dict[str, Any]:
    """Result-relevant configuration as plain JSON-compatible data."""
    return config.model_dump(mode="json", exclude=NON_RESULT_FIELDS)


def _measure(
    config: CampaignConfig,
    drop_index: int,
    ue: UeNode,
    gnbs: Sequence[GnbNode],
) -> MeasurementSet:
    """Synthesize and ambiguity-corrupt one UE's links on its own streams."""
    seed = config.master_seed
    measurement_rng = child_rng(seed, drop_index, Stream.MEASUREMENT, ue.id)
    ambiguity_rng = child_rng(seed, drop_index, Stream.AMBIGUITY, ue.id)
    clean = synthesize_set(ue, gnbs, config.wavelength, config.noise, measurement_rng)
    return corrupt_set(clean, config.ambiguity, ambiguity_rng)


def run_drop(
    config: CampaignConfig,
    drop_index: int,
    *,
    estimate_positions: bool = True,
) -> DropResult:
    """
    Run one drop end to end.

    Args:
        config: Campaign configuration
        drop_index: Index of the drop within the campaign
        estimate_positions: Solve positions; False gathers phase statistics only

    Returns:
        Samples, tallies and exclusion counts of the drop
    """
    result = DropResult(drop_index=drop_index)
    deployment = generate_layout(
        config.layout,
        config.ues_per_drop,
        child_seed(config.master_seed, drop_index, Stream.LAYOUT),
    )
    hull = GnbHull(deployment.gnbs)
    positions = deployment.gnb_positions
    wavelength = config.wavelength

    reference_sets = {
        ref.id: _measure(config, drop_index, ref, deployment.gnbs)
        for ref in deployment.reference_ues
    }
    outcome = tally(m for s in reference_sets.values() for m in s.measurements)

    for ue in deployment.target_ues:
        target_set = _measure(config, drop_index, ue, deployment.gnbs)
        outcome = outcome + tally(target_set.measurements)

        if not hull.contains(ue.position):
            result.exclusions["outside_hull"] += 1
            logger.debug("Drop %d UE %d outside gNB hull", drop_index, ue.id)
            continue

        reference = select_reference(
            deployment.gnb_by_id[ue.serving_gnb], deployment.reference_ues
        )
        reference_set = reference_sets[reference.id]

        for m in target_set.measurements:
            result.add(ue.id, "link_phase_error", link_phase_error(m, wavelength))
        try:
            full = form_double_differences(target_set, reference_set, positions)
        except InsufficientGeometryError:
            full = None
        if full is not None:
            for dd in full.diffs:
                error = double_diff_phase_error(dd, wavelength)
                result.add(ue.id, "dd_phase_error", error)

        if not estimate_positions:
            continue

        result.attempted += 1
        try:
            filtered = filter_measurements(target_set, config.filtering)
            dd_set = form_double_differences(filtered, reference_set, positions)
            estimation = solve(dd_set, config.solver, wavelength, truth=ue.position)
        except InsufficientGeometryError as e:
            result.exclusions["insufficient_geometry"] += 1
            logger.debug("Drop %d UE %d excluded: %s", drop_index, ue.id, e)
            continue
        except (IllConditionedGeometryError, SingularGeometryError) as e:
            result.exclusions["ill_conditioned"] += 1
            logger.debug("Drop %d UE %d excluded: %s", drop_index, ue.id, e)
            continue

        if not estimation.converged:
            result.exclusions["not_converged"] += 1
            logger.debug(
                "Drop %d UE %d did not converge after %d iterations",
                drop_index,
                ue.id,
                estimation.iterations,
            )
            continue

        result.converged += 1
        result.add(ue.id, "horizontal", estimation.horizontal_error)
        result.add(ue.id, "vertical", estimation.vertical_error)
        result.add(ue.id, "error_3d", estimation.error_3d)
        if estimation.hdop is not None and estimation.vdop is not None:
            result.add(ue.id, "hdop", estimation.hdop)
            result.add(ue.id, "vdop", estimation.vdop)

    result.ambiguity = outcome
    logger.debug(
        "Drop %d done: attempted=%d, converged=%d, excluded=%d",
        drop_index,
        result.attempted,
        result.converged,
        sum(result.exclusions.values()),
    )
    return result


def run_campaign(
    config: CampaignConfig,
    *,
    estimate_positions: bool = True,
) -> RunStatistics:
    """
    Run every drop of a campaign and pool the results.

    Drops are independent and may run in worker processes; the pooled
    statistics do not depend on the worker count.

    Raises:
        NoSolvableUEsError: If positions were estimated and none converged
    """
    started = time.monotonic()
    logger.info(
        "Starting campaign: drops=%d, ues_per_drop=%d, scenario=%s, seed=%d, "
        "workers=%d",
        config.n_drops,
        config.ues_per_drop,
        config.scenario,
        config.master_seed,
        config.workers,
    )
    work = partial(run_drop, config, estimate_positions=estimate_positions)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            drops = list(pool.map(work, range(config.n_drops)))
    else:
        drops = [work(i) for i in range(config.n_drops)]

    stats = RunStatistics.from_drops(
        drops,
        configured_zeta=config.ambiguity.zeta,
        config_echo=config_echo(config),
        wavelength=config.wavelength,
    )
    logger.info(
        "Campaign finished in %.1fs: attempted=%d, converged=%d, excluded=%d, "
        "zeta_hat=%.3g",
        time.monotonic() - started,
        stats.attempted,
        stats.converged,
        stats.excluded_ues,
        stats.ambiguity_tally.empirical_zeta,
    )
    if estimate_positions and stats.converged == 0:
        msg = "Campaign produced no converged in-hull UE"
        raise NoSolvableUEsError(msg)
    return stats
