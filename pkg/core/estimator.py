"""Iterative least-squares position estimation from double differences."""

import logging
import math
from dataclasses import dataclass

import numpy as np

from core.differencing import DoubleDiffSet
from core.errors import IllConditionedGeometryError, SingularGeometryError
from core.geometry import Position3D, distance
from settings.config import InitialGuess, SolverConfig, Wavelength

logger = logging.getLogger(__name__)

# Distances below this are treated as coincident points
MIN_DISTANCE = 1e-9


@dataclass(frozen=True, slots=True)
class EstimationResult:
    """Outcome of one position solve."""

    estimate: Position3D
    iterations: int
    converged: bool
    final_update_norm: float
    residual_norms: tuple[float, ...] = ()
    horizontal_error: float | None = None
    vertical_error: float | None = None
    error_3d: float | None = None
    hdop: float | None = None
    vdop: float | None = None
    gdop: float | None = None


def design_row(
    candidate: Position3D,
    gnb_i: Position3D,
    serving: Position3D,
) -> tuple[float, float, float]:
    """
    Gradient of d(candidate, gnb_i) - d(candidate, serving).

    Raises:
        SingularGeometryError: If the candidate coincides with either gNB
    """
    d_i = distance(candidate, gnb_i)
    d_s = distance(candidate, serving)
    if d_i < MIN_DISTANCE or d_s < MIN_DISTANCE:
        msg = "Candidate position coincides with a gNB; design row is undefined"
        raise SingularGeometryError(msg)
    return (
        (candidate.x - gnb_i.x) / d_i - (candidate.x - serving.x) / d_s,
        (candidate.y - gnb_i.y) / d_i - (candidate.y - serving.y) / d_s,
        (candidate.z - gnb_i.z) / d_i - (candidate.z - serving.z) / d_s,
    )


def design_matrix(candidate: Position3D, dd_set: DoubleDiffSet) -> np.ndarray:
    """Stack design rows of every double difference into an (n, 3) matrix."""
    serving = dd_set.gnb_positions[dd_set.serving_gnb_id]
    return np.array(
        [
            design_row(candidate, dd_set.gnb_positions[dd.neighbor_gnb_id], serving)
            for dd in dd_set.diffs
        ]
    )


def residual_vector(
    candidate: Position3D,
    dd_set: DoubleDiffSet,
    wavelength: Wavelength,
) -> np.ndarray:
    """
    Observed minus predicted double-differenced ranges in meters.

    The prediction is (d_i - d_s)(candidate) - delta_d_ref, so the vector
    vanishes at the true position of a noiseless set.
    """
    lam = wavelength.meters
    serving = dd_set.gnb_positions[dd_set.serving_gnb_id]
    d_s = distance(candidate, serving)
    return np.array(
        [
            lam * dd.value / (2.0 * math.pi)
            - (
                distance(candidate, dd_set.gnb_positions[dd.neighbor_gnb_id])
                - d_s
                - dd.reference_delta_distance
            )
            for dd in dd_set.diffs
        ]
    )


def dilution_of_precision(g: np.ndarray) -> tuple[float, float, float]:
    """
    Dilution of precision of a design matrix.

    Args:
        g: Design matrix with columns x, y, z

    Returns:
        (HDOP, VDOP, GDOP) from the diagonal of (G^T G)^-1
    """
    try:
        q = np.linalg.inv(g.T @ g)
    except np.linalg.LinAlgError as e:
        msg = "Design matrix is singular; dilution of precision is unbounded"
        raise IllConditionedGeometryError(msg) from e
    diag = np.clip(np.diag(q), 0.0, None)
    return (
        float(np.sqrt(diag[0] + diag[1])),
        float(np.sqrt(diag[2])),
        float(np.sqrt(diag.sum())),
    )


def error_metrics(
    estimate: Position3D,
    truth: Position3D,
) -> tuple[float, float, float]:
    """Horizontal, vertical and 3D errors in meters."""
    dx = estimate.x - truth.x
    dy = estimate.y - truth.y
    dz = estimate.z - truth.z
    return math.hypot(dx, dy), abs(dz), math.hypot(dx, dy, dz)


def initial_position(dd_set: DoubleDiffSet, config: SolverConfig) -> Position3D:
    """Starting point of the iteration for the configured policy."""
    custom = config.custom_position
    if config.initial_guess is InitialGuess.CUSTOM and custom is not None:
        return Position3D(*custom)
    serving = dd_set.gnb_positions[dd_set.serving_gnb_id]
    return Position3D(serving.x, serving.y, config.initial_height)


def _bounding_box(dd_set: DoubleDiffSet, factor: float) -> tuple[np.ndarray, float]:
    points = np.array([p.as_array() for p in dd_set.gnb_positions.values()])
    center = points.mean(axis=0)
    span = float(np.max(points.max(axis=0) - points.min(axis=0)))
    return center, factor * max(span, 1.0)


def solve(
    dd_set: DoubleDiffSet,
    config: SolverConfig,
    wavelength: Wavelength | None = None,
    truth: Position3D | None = None,
) -> EstimationResult:
    """
    Estimate a UE position by Gauss-Newton iteration on double differences.

    Each step solves (G^T G) delta = G^T h and moves the candidate by delta
    until |delta| < epsilon, the iteration budget runs out, or the iteration
    diverges.

    Args:
        dd_set: Double differences of one target UE
        config: Solver parameters
        wavelength: Carrier wavelength (defaults to the 3.5 GHz carrier)
        truth: True position; fills the error fields when given

    Returns:
        Estimation result; non-convergence is reported, not raised

    Raises:
        IllConditionedGeometryError: If G^T G is singular or too ill-conditioned
        SingularGeometryError: If an iterate lands on a gNB
    """
    wavelength = wavelength or Wavelength()
    candidate = initial_position(dd_set, config)
    center, half_width = _bounding_box(dd_set, config.divergence_factor)

    converged = False
    iterations = 0
    update_norm = math.inf
    previous_norm: float | None = None
    residual_norms: list[float] = []

    for _ in range(config.max_iterations):
        g = design_matrix(candidate, dd_set)
        h = residual_vector(candidate, dd_set, wavelength)
        residual_norms.append(float(np.linalg.norm(h)))

        normal = g.T @ g
        condition = np.linalg.cond(normal)
        if not np.isfinite(condition) or condition > config.condition_limit:
            msg = (
                f"UE {dd_set.target_ue_id}: normal matrix condition number "
                f"{condition:.3g} exceeds {config.condition_limit:.3g}"
            )
            raise IllConditionedGeometryError(msg)

        step = np.linalg.solve(normal, g.T @ h)
        update_norm = float(np.linalg.norm(step))
        candidate = Position3D.from_array(candidate.as_array() + step)
        iterations += 1

        if update_norm < config.epsilon:
            converged = True
            break
        if previous_norm is not None and (
            update_norm > config.divergence_factor * previous_norm
        ):
            logger.debug(
                "UE %d: update grew from %.3g to %.3g m, stopping",
                dd_set.target_ue_id,
                previous_norm,
                update_norm,
            )
            break
        if np.any(np.abs(candidate.as_array() - center) > half_width):
            logger.debug("UE %d: iterate left the search box", dd_set.target_ue_id)
            break
        previous_norm = update_norm

    try:
        hdop, vdop, gdop = dilution_of_precision(design_matrix(candidate, dd_set))
    except (IllConditionedGeometryError, SingularGeometryError):
        hdop = vdop = gdop = None

    errors: tuple[float | None, float | None, float | None] = (None, None, None)
    if truth is not None:
        errors = error_metrics(candidate, truth)

    return EstimationResult(
        estimate=candidate,
        iterations=iterations,
        converged=converged,
        final_update_norm=update_norm,
        residual_norms=tuple(residual_norms),
        horizontal_error=errors[0],
        vertical_error=errors[1],
        error_3d=errors[2],
        hdop=hdop,
        vdop=vdop,
        gdop=gdop,
    )
