"""Seeded random streams and the Gaussian draw convention.

Streams are PCG64 generators keyed by tuples of nonnegative integers through
numpy's SeedSequence, so (seed, k) and (seed, level, k) derive independent,
reproducible streams.  Normal variates are produced by inverse CDF
(scipy.special.ndtri) applied to one uniform double each, so every normal
draw consumes exactly one 64-bit uniform from its stream; consumers document
how many draws they take per unit of work, which pins byte-level determinism.
"""

import numpy as np
from scipy.special import ndtri


def stream(*key: int) -> np.random.Generator:
    for part in key:
        if part < 0:
            raise ValueError(f"stream key parts must be nonnegative, got {part}")
    return np.random.default_rng(np.random.SeedSequence(list(key)))


def normal_draws(rng: np.random.Generator, size) -> np.ndarray:
    """Standard normals, one uniform double consumed per draw."""
    u = rng.random(size)
    # guard the open-interval requirement of the inverse CDF
    tiny = np.nextafter(0.0, 1.0)
    return ndtri(np.clip(u, tiny, None))
