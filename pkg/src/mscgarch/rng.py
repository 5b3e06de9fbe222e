"""Seedable random streams.

Every consumer of randomness draws from its own stream derived from a single
user seed, so simulating data and running MCMC chains with the same seed never
share random numbers::

    seed ──► SeedSequence(seed, spawn_key=(SIMULATION,))        simulate
         └─► SeedSequence(seed, spawn_key=(MCMC, chain))         Gibbs chain ``chain``

The generator is numpy's PCG64 (``numpy.random.default_rng``).
"""

import numpy as np

SIMULATION = 0
MCMC = 1


def make_rng(seed: int, stream: int, *substreams: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), *map(int, substreams)))
    return np.random.default_rng(ss)


def simulation_rng(seed: int) -> np.random.Generator:
    return make_rng(seed, SIMULATION)


def chain_rng(seed: int, chain: int = 0) -> np.random.Generator:
    return make_rng(seed, MCMC, chain)
