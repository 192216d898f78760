"""Indoor-factory deployment geometry: gNB grid, UEs and convex-hull filtering."""

import itertools
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Self

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from core.errors import ConfigurationError, DegenerateHullError, GeometryError
from settings.config import LayoutConfig

logger = logging.getLogger(__name__)

# Boundary points of the gNB hull count as inside
HULL_TOLERANCE = 1e-9


@dataclass(frozen=True, slots=True)
class Position3D:
    """Hall-local Cartesian position in meters."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            msg = f"Position must be finite, got ({self.x}, {self.y}, {self.z})"
            raise GeometryError(msg)

    def as_array(self) -> np.ndarray:
        """Return the position as a length-3 float array."""
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float] | np.ndarray) -> Self:
        """Build a position from any length-3 sequence."""
        return cls(float(values[0]), float(values[1]), float(values[2]))

    def translated(self, dx: float, dy: float, dz: float) -> Self:
        """Return this position shifted by a constant vector."""
        return type(self)(self.x + dx, self.y + dy, self.z + dz)


class UeKind(StrEnum):
    """Role of a UE in the deployment."""

    TARGET = "target"
    REFERENCE = "reference"


@dataclass(frozen=True, slots=True)
class GnbNode:
    """Transmitter with its unknown clock bias b_i (seconds)."""

    id: int
    position: Position3D
    clock_bias: float = 0.0

    def __post_init__(self) -> None:
        if self.position.z < 0:
            msg = f"gNB {self.id} is below the floor (z={self.position.z})"
            raise GeometryError(msg)


@dataclass(frozen=True, slots=True)
class UeNode:
    """Receiver with its unknown clock bias b_m (seconds)."""

    id: int
    position: Position3D
    clock_bias: float
    kind: UeKind
    serving_gnb: int

    def __post_init__(self) -> None:
        if self.position.z < 0:
            msg = f"UE {self.id} is below the floor (z={self.position.z})"
            raise GeometryError(msg)


@dataclass(frozen=True, slots=True)
class Deployment:
    """Immutable scene of one Monte-Carlo drop."""

    config: LayoutConfig
    gnbs: tuple[GnbNode, ...]
    target_ues: tuple[UeNode, ...]
    reference_ues: tuple[UeNode, ...]
    seed: int
    gnb_by_id: dict[int, GnbNode] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "gnb_by_id", {g.id: g for g in self.gnbs})
        if len(self.gnb_by_id) != len(self.gnbs):
            msg = "gNB ids must be unique within a deployment"
            raise GeometryError(msg)
        if len(self.gnbs) != self.config.gnb_count:
            msg = f"Expected {self.config.gnb_count} gNBs, got {len(self.gnbs)}"
            raise GeometryError(msg)
        if len(self.reference_ues) != self.config.reference_ue_count:
            msg = (
                f"Expected {self.config.reference_ue_count} reference UEs, "
                f"got {len(self.reference_ues)}"
            )
            raise GeometryError(msg)
        for ue in (*self.target_ues, *self.reference_ues):
            if ue.serving_gnb not in self.gnb_by_id:
                msg = f"UE {ue.id} is served by unknown gNB {ue.serving_gnb}"
                raise GeometryError(msg)

    @property
    def gnb_positions(self) -> dict[int, Position3D]:
        """Lookup of gNB positions by id."""
        return {g.id: g.position for g in self.gnbs}


def distance(a: Position3D, b: Position3D) -> float:
    """Euclidean 3D distance in meters."""
    return math.hypot(a.x - b.x, a.y - b.y, a.z - b.z)


def horizontal_distance(a: Position3D, b: Position3D) -> float:
    """Distance between the floor projections of two positions."""
    return math.hypot(a.x - b.x, a.y - b.y)


def nearest_gnb(position: Position3D, gnbs: Sequence[GnbNode]) -> int:
    """Return the id of the gNB closest to a position, lowest id on ties."""
    if not gnbs:
        msg = "Cannot select a serving gNB from an empty list"
        raise GeometryError(msg)
    return min(gnbs, key=lambda g: (distance(position, g.position), g.id)).id


def assign_serving(ue: UeNode, gnbs: Sequence[GnbNode]) -> int:
    """Serving gNB of a UE: nearest in 3D, ties broken by lowest id."""
    return nearest_gnb(ue.position, gnbs)


def grid_shape(config: LayoutConfig) -> tuple[int, int]:
    """
    Number of gNB grid columns (along length) and rows (along width).

    Raises:
        ConfigurationError: If the spacing does not tile the hall or the grid
            size disagrees with gnb_count
    """
    cols = config.hall_length / config.gnb_spacing
    rows = config.hall_width / config.gnb_spacing
    if (
        cols < 1
        or rows < 1
        or not math.isclose(cols, round(cols), abs_tol=1e-9)
        or not math.isclose(rows, round(rows), abs_tol=1e-9)
    ):
        msg = (
            f"gNB spacing {config.gnb_spacing} m does not tile a "
            f"{config.hall_length} x {config.hall_width} m hall"
        )
        raise ConfigurationError(msg)
    cols, rows = round(cols), round(rows)
    if cols * rows != config.gnb_count:
        msg = (
            f"Grid of {cols} x {rows} gNBs does not match "
            f"gnb_count={config.gnb_count}"
        )
        raise ConfigurationError(msg)
    return cols, rows


def _reference_grid(count: int, aspect: float) -> tuple[int, int]:
    """Pick rows x cols = count with cols/rows closest to the hall aspect."""
    pairs = [(r, count // r) for r in range(1, count + 1) if count % r == 0]
    return min(pairs, key=lambda rc: (abs(rc[1] / rc[0] - aspect), rc[0]))


def reference_positions(config: LayoutConfig) -> list[Position3D]:
    """
    Fixed reference-UE positions at the centroids of equal hall cells.

    Four reference UEs in a 2:1 hall land on the quadrant centroids. The
    positions depend only on the hall dimensions.
    """
    rows, cols = _reference_grid(
        config.reference_ue_count,
        config.hall_length / config.hall_width,
    )
    cell_x = config.hall_length / cols
    cell_y = config.hall_width / rows
    return [
        Position3D((c + 0.5) * cell_x, (r + 0.5) * cell_y, config.ue_height)
        for r in range(rows)
        for c in range(cols)
    ]


def generate_layout(config: LayoutConfig, n_target_ues: int, seed: int) -> Deployment:
    """
    Generate an InF deployment for one drop.

    Args:
        config: Hall and placement parameters
        n_target_ues: Number of target UEs dropped uniformly on the floor
        seed: Seed of the drop's layout stream

    Returns:
        Deployment with gridded gNBs, random targets and fixed reference UEs

    Raises:
        ConfigurationError: If the grid does not fit the hall or no UE is asked for
    """
    if n_target_ues < 1:
        msg = f"At least one target UE is required, got {n_target_ues}"
        raise ConfigurationError(msg)
    cols, rows = grid_shape(config)
    rng = np.random.default_rng(seed)
    bias = config.clock_bias_max

    xs = config.gnb_spacing / 2 + config.gnb_spacing * np.arange(cols)
    ys = config.gnb_spacing / 2 + config.gnb_spacing * np.arange(rows)
    heights = rng.uniform(config.gnb_height_min, config.gnb_height_max, cols * rows)
    gnb_biases = rng.uniform(-bias, bias, cols * rows)
    gnbs = tuple(
        GnbNode(
            id=k,
            position=Position3D(float(x), float(y), float(heights[k])),
            clock_bias=float(gnb_biases[k]),
        )
        for k, (x, y) in enumerate(itertools.product(xs, ys))
    )

    ue_x = rng.uniform(0.0, config.hall_length, n_target_ues)
    ue_y = rng.uniform(0.0, config.hall_width, n_target_ues)
    ue_biases = rng.uniform(-bias, bias, n_target_ues)
    targets = []
    for k in range(n_target_ues):
        position = Position3D(float(ue_x[k]), float(ue_y[k]), config.ue_height)
        targets.append(
            UeNode(
                id=k,
                position=position,
                clock_bias=float(ue_biases[k]),
                kind=UeKind.TARGET,
                serving_gnb=nearest_gnb(position, gnbs),
            )
        )

    ref_positions = reference_positions(config)
    ref_biases = rng.uniform(-bias, bias, len(ref_positions))
    references = tuple(
        UeNode(
            id=n_target_ues + k,
            position=position,
            clock_bias=float(ref_biases[k]),
            kind=UeKind.REFERENCE,
            serving_gnb=nearest_gnb(position, gnbs),
        )
        for k, position in enumerate(ref_positions)
    )

    logger.debug(
        "Generated layout: gnbs=%d, targets=%d, references=%d, seed=%d",
        len(gnbs),
        n_target_ues,
        len(references),
        seed,
    )
    return Deployment(
        config=config,
        gnbs=gnbs,
        target_ues=tuple(targets),
        reference_ues=references,
        seed=seed,
    )


class GnbHull:
    """2D convex hull of gNB floor projections."""

    def __init__(self, gnbs: Sequence[GnbNode]) -> None:
        """
        Build the hull once for repeated membership queries.

        Raises:
            DegenerateHullError: If fewer than three gNBs are given or their
                projections are collinear
        """
        if len(gnbs) < 3:  # noqa: PLR2004
            msg = f"Convex hull needs at least 3 gNBs, got {len(gnbs)}"
            raise DegenerateHullError(msg)
        points = np.array([[g.position.x, g.position.y] for g in gnbs])
        try:
            hull = ConvexHull(points)
        except QhullError as e:
            msg = "gNB floor projections are collinear; no 2D hull exists"
            raise DegenerateHullError(msg) from e
        # Rows are unit outward normals n and offsets b with n.p + b <= 0 inside
        self._equations = hull.equations

    def contains(self, p: Position3D) -> bool:
        """Whether (p.x, p.y) lies in the hull, boundary included."""
        values = self._equations[:, :2] @ np.array([p.x, p.y]) + self._equations[:, 2]
        return bool(np.all(values <= HULL_TOLERANCE))


def in_convex_hull(p: Position3D, gnbs: Sequence[GnbNode]) -> bool:
    """One-shot convex-hull membership test of a position's floor projection."""
    return GnbHull(gnbs).contains(p)
