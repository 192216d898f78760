"""Property checks on small instances, run by the ``validate`` command."""

import itertools
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from core.campaign.runner import run_campaign
from core.campaign.statistics import percentile
from core.differencing import DoubleDiffSet, form_double_differences, select_reference
from core.errors import NoSolvableUEsError, PositioningError
from core.estimator import design_row, residual_vector, solve
from core.geometry import (
    Deployment,
    GnbHull,
    GnbNode,
    Position3D,
    UeKind,
    UeNode,
    distance,
    generate_layout,
    nearest_gnb,
)
from core.measurement import synthesize_set
from settings.config import (
    AmbiguityModel,
    CampaignConfig,
    LayoutConfig,
    NoiseModel,
    SolverConfig,
    Wavelength,
    apply_overrides,
)

logger = logging.getLogger(__name__)

NOISELESS = NoiseModel(sigma_los=0.0, sigma_nlos=0.0, nlos_excess_mean=0.0)

# Compact hall with 8 gNBs on a 10 m grid; positions on its 0.5 m lattice
SMALL_HALL = LayoutConfig(
    hall_length=40.0,
    hall_width=20.0,
    gnb_spacing=10.0,
    gnb_count=8,
    gnb_height_min=2.0,
    gnb_height_max=5.0,
    ceiling_height=5.0,
    ue_height=1.5,
)
GRID_STEP = 0.5


@dataclass(frozen=True, slots=True)
class CheckResult:
    """Outcome of one property check."""

    name: str
    passed: bool
    detail: str


def check_bias_cancellation(n_scenes: int = 1000, seed: int = 1) -> CheckResult:
    """Noiseless double differences equal the geometric term for any clock biases."""
    rng = np.random.default_rng(seed)
    wavelength = Wavelength()
    lam = wavelength.meters
    worst = 0.0
    for _ in range(n_scenes):
        gnbs = [
            GnbNode(
                id=k,
                position=Position3D(*rng.uniform([0, 0, 3], [300, 150, 10])),
                clock_bias=float(rng.uniform(-1e-3, 1e-3)),
            )
            for k in range(6)
        ]
        ues = []
        for k, kind in enumerate((UeKind.TARGET, UeKind.REFERENCE)):
            position = Position3D(*rng.uniform([0, 0, 0], [300, 150, 3]))
            ues.append(
                UeNode(
                    id=k,
                    position=position,
                    clock_bias=float(rng.uniform(-1e-3, 1e-3)),
                    kind=kind,
                    serving_gnb=nearest_gnb(position, gnbs),
                )
            )
        target, reference = (
            synthesize_set(ue, gnbs, wavelength, NOISELESS, rng) for ue in ues
        )
        positions = {g.id: g.position for g in gnbs}
        dd_set = form_double_differences(target, reference, positions)
        for dd in dd_set.diffs:
            worst = max(worst, abs(lam * dd.value / (2 * math.pi) - dd.geometric_value))
    return CheckResult(
        "bias_cancellation", worst <= 1e-9, f"max deviation {worst:.3e} m"
    )


def check_gradient(
    n_geometries: int = 1000,
    seed: int = 2,
    step: float = 1e-5,
) -> CheckResult:
    """Design rows match central finite differences of the range difference."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_geometries):
        candidate, gnb_i, serving = (
            Position3D(*rng.uniform([0, 0, 0], [300, 150, 10])) for _ in range(3)
        )
        if min(distance(candidate, gnb_i), distance(candidate, serving)) < 1.0:
            continue
        row = design_row(candidate, gnb_i, serving)
        for axis in range(3):
            offset = np.zeros(3)
            offset[axis] = step
            plus = Position3D.from_array(candidate.as_array() + offset)
            minus = Position3D.from_array(candidate.as_array() - offset)
            numeric = (
                (distance(plus, gnb_i) - distance(plus, serving))
                - (distance(minus, gnb_i) - distance(minus, serving))
            ) / (2 * step)
            worst = max(worst, abs(numeric - row[axis]) / max(1.0, abs(row[axis])))
    return CheckResult("gradient", worst <= 1e-6, f"max relative deviation {worst:.3e}")


def check_noiseless_exactness(config: CampaignConfig) -> CheckResult:
    """Noiseless campaigns recover positions to within ten times epsilon."""
    noiseless = apply_overrides(
        config,
        {
            "noise": NOISELESS.model_dump(),
            "ambiguity": {"zeta": 0.0},
        },
    )
    try:
        stats = run_campaign(noiseless)
    except NoSolvableUEsError as e:
        return CheckResult("noiseless_exactness", False, str(e))
    p90 = percentile(stats.samples("error_3d"), 0.9)
    bound = 10 * noiseless.solver.epsilon
    passed = p90 <= bound and stats.convergence_rate >= 0.99  # noqa: PLR2004
    return CheckResult(
        "noiseless_exactness",
        passed,
        f"p90 3D error {p90:.3e} m (bound {bound:.1e}), "
        f"convergence {stats.convergence_rate:.3f}",
    )


def grid_minimizer(
    deployment: Deployment,
    dd_set: DoubleDiffSet,
    wavelength: Wavelength,
) -> Position3D:
    """Brute-force minimizer of the residual norm over the hall's 0.5 m lattice."""
    config = deployment.config
    xs = np.arange(0.0, config.hall_length + GRID_STEP / 2, GRID_STEP)
    ys = np.arange(0.0, config.hall_width + GRID_STEP / 2, GRID_STEP)
    zs = np.arange(0.0, config.ceiling_height + GRID_STEP / 2, GRID_STEP)
    grid = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1).reshape(-1, 3)

    lam = wavelength.meters
    serving = dd_set.gnb_positions[dd_set.serving_gnb_id].as_array()
    d_s = np.linalg.norm(grid - serving, axis=1)
    cost = np.zeros(len(grid))
    for dd in dd_set.diffs:
        neighbor = dd_set.gnb_positions[dd.neighbor_gnb_id].as_array()
        d_i = np.linalg.norm(grid - neighbor, axis=1)
        observed = lam * dd.value / (2 * math.pi)
        cost += (observed - (d_i - d_s - dd.reference_delta_distance)) ** 2
    return Position3D.from_array(grid[int(np.argmin(cost))])


def check_grid_oracle(n_instances: int = 20, seed: int = 3) -> CheckResult:
    """Least squares lands within one lattice cell of the brute-force minimizer."""
    wavelength = Wavelength()
    solver = SolverConfig()
    rng = np.random.default_rng(seed)
    failures = 0
    checked = 0
    for instance in itertools.count():
        if checked >= n_instances or instance > 10 * n_instances:
            break
        deployment = generate_layout(SMALL_HALL, 1, seed + instance)
        hull = GnbHull(deployment.gnbs)
        # Truth on the lattice, strictly inside the gNB hull
        truth = Position3D(
            float(rng.integers(11, 70)) * GRID_STEP,
            float(rng.integers(11, 30)) * GRID_STEP,
            SMALL_HALL.ue_height,
        )
        if not hull.contains(truth):
            continue
        target_ue = UeNode(
            id=0,
            position=truth,
            clock_bias=float(rng.uniform(-1e-6, 1e-6)),
            kind=UeKind.TARGET,
            serving_gnb=nearest_gnb(truth, deployment.gnbs),
        )
        reference = select_reference(
            deployment.gnb_by_id[target_ue.serving_gnb], deployment.reference_ues
        )
        gnbs = deployment.gnbs
        target_set = synthesize_set(target_ue, gnbs, wavelength, NOISELESS, rng)
        reference_set = synthesize_set(reference, gnbs, wavelength, NOISELESS, rng)
        dd_set = form_double_differences(
            target_set, reference_set, deployment.gnb_positions
        )
        try:
            estimate = solve(dd_set, solver, wavelength).estimate
        except PositioningError:
            failures += 1
            checked += 1
            continue
        oracle = grid_minimizer(deployment, dd_set, wavelength)
        gap = np.abs(estimate.as_array() - oracle.as_array()).max()
        if gap > GRID_STEP:
            failures += 1
            logger.debug(
                "Grid oracle mismatch: estimate=%s oracle=%s residual=%.3e",
                estimate,
                oracle,
                float(np.linalg.norm(residual_vector(estimate, dd_set, wavelength))),
            )
        checked += 1
    passed = checked >= n_instances and failures == 0
    return CheckResult(
        "grid_oracle",
        passed,
        f"{failures} of {checked} instances off the grid minimizer",
    )


def small_campaign(config: CampaignConfig) -> CampaignConfig:
    """Shrink a campaign to a few drops for the property suite."""
    return apply_overrides(
        config,
        {
            "n_drops": 5,
            "ues_per_drop": 40,
            "workers": 1,
            "ambiguity": AmbiguityModel().model_dump(),
        },
    )


def run_validation(config: CampaignConfig) -> list[CheckResult]:
    """Run the whole property suite and log one line per check."""
    checks: list[Callable[[], CheckResult]] = [
        check_bias_cancellation,
        check_gradient,
        lambda: check_noiseless_exactness(small_campaign(config)),
        check_grid_oracle,
    ]
    results = []
    for check in checks:
        result = check()
        status = "PASS" if result.passed else "FAIL"
        logger.info("%s %s: %s", status, result.name, result.detail)
        results.append(result)
    return results
