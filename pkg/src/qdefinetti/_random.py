"""Seeded random number generation.

Every random draw in the package goes through :func:`make_rng`, which wraps
the Mersenne Twister (MT19937, a twisted generalised feedback shift register)
in a :class:`numpy.random.Generator`. Bit streams are therefore fixed for a
given integer seed and numpy's MT19937 seeding routine.
"""
import numpy as np


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.MT19937(seed))
