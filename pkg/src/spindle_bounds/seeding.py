"""Reproducible random streams.

Every draw in the package comes from a Philox counter-based generator keyed by a
:class:`numpy.random.SeedSequence` built from ``(seed, family, purpose)``. Streams with different
keys are statistically independent and the same key always replays the same numbers, on any
platform and in any worker.
"""
from enum import IntEnum
from typing import List

import numpy as np
import torch
from torch import Tensor

_SEED_MASK = (1 << 64) - 1


class Stream(IntEnum):
    """Purpose of a random stream; part of the stream key."""

    SIGNS = 1
    PERMUTATION = 2
    GAUSSIAN = 3
    SWAPS = 4
    INIT = 5
    OUTPUT_INIT = 6
    ROTATION = 7
    SAMPLING = 8


def generator(seed: int, *keys: int) -> np.random.Generator:
    """Philox generator for the stream identified by ``seed`` and ``keys``."""
    entropy = [int(seed) & _SEED_MASK, *(int(key) for key in keys)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def spawn_seeds(master_seed: int, count: int) -> List[int]:
    """Derive ``count`` independent 64-bit seeds from a master seed."""
    if count < 0:
        raise ValueError(f"cannot spawn a negative number of seeds: {count}")
    if count == 0:
        return []
    state = np.random.SeedSequence(int(master_seed) & _SEED_MASK).generate_state(count, dtype=np.uint64)
    return [int(s) for s in state]


def signs(rng: np.random.Generator, n: int) -> Tensor:
    """Uniform ``{-1, +1}`` vector of length ``n`` as float64."""
    return torch.from_numpy(1.0 - 2.0 * rng.integers(0, 2, size=n))


def gaussian(rng: np.random.Generator, *shape: int, sigma: float = 1.0) -> Tensor:
    return torch.from_numpy(sigma * rng.standard_normal(size=shape))


def permutation(rng: np.random.Generator, n: int) -> Tensor:
    return torch.from_numpy(rng.permutation(n))
