"""Seeded random streams shared by the simulators and the design search.

All streams use the Philox counter-based bit generator keyed through
``numpy.random.SeedSequence``, so a given (seed, substream) pair produces
the same draws on every run, platform, and thread count.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Return a Philox generator keyed by ``seed`` and substream indices."""
    entropy = (int(seed),) + tuple(int(s) for s in stream)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, index: int) -> int:
    """Child seed for replicate ``index``, mixed via SeedSequence hashing."""
    ss = np.random.SeedSequence((int(seed), int(index)))
    return int(ss.generate_state(1, np.uint64)[0])
