"""
Seeded random streams.

Every consumer of randomness gets its own numpy Generator derived from the
scenario seed and a stream tag, so adding draws in one place never shifts the
values seen elsewhere.
"""

from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    """Stream tags mixed into the seed sequence."""

    VOTES = 1
    KEYS = 2
    MASK_ROW = 3
    COMMITMENT = 4
    ADVERSARY = 5
    ANALYSIS = 6


def make_rng(seed: int, stream: Stream, *ids: int) -> np.random.Generator:
    """
    Build the generator for one stream of one scenario.

    Args:
        seed: Scenario seed (non-negative)
        stream: Stream tag
        *ids: Extra discriminators (e.g. voter index)

    Returns:
        np.random.Generator: Deterministic generator
    """
    return np.random.default_rng([seed, int(stream), *ids])
