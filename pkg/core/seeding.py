"""Counter-based random streams keyed by (master seed, drop, stream, UE)."""

from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    """Independent random streams of a drop."""

    LAYOUT = 0
    MEASUREMENT = 1
    AMBIGUITY = 2


def child_seed_sequence(
    master_seed: int,
    drop_index: int,
    stream: Stream,
    ue_index: int | None = None,
) -> np.random.SeedSequence:
    """Derive the seed sequence of one (drop, stream[, UE]) cell."""
    key = (drop_index, int(stream)) if ue_index is None else (
        drop_index,
        int(stream),
        ue_index,
    )
    return np.random.SeedSequence(entropy=master_seed, spawn_key=key)


def child_rng(
    master_seed: int,
    drop_index: int,
    stream: Stream,
    ue_index: int | None = None,
) -> np.random.Generator:
    """
    Build a generator for one cell of the seeding lattice.

    The result depends only on the arguments, so drops and UEs can be
    processed in any order or in parallel without changing any draw.
    """
    seq = child_seed_sequence(master_seed, drop_index, stream, ue_index)
    return np.random.Generator(np.random.Philox(seq))


def child_seed(master_seed: int, drop_index: int, stream: Stream) -> int:
    """Collapse a child seed sequence into a plain 64-bit integer seed."""
    seq = child_seed_sequence(master_seed, drop_index, stream)
    return int(seq.generate_state(1, dtype=np.uint64)[0])
