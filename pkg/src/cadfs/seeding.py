"""Deterministic derivation of child seeds from one master seed."""

import numpy as np

# purpose tags mixed into derived seeds
OUTER_FOLDS = 0
WRAPPER = 1
FIT = 2
FITNESS_FOLDS = 3


def derive_seed(master: int, *keys: int) -> int:
    """Stable 32-bit seed for the stream identified by ``(master, *keys)``."""
    seq = np.random.SeedSequence([int(master), *map(int, keys)])
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))
