"""
Seeding - counter-based random streams keyed by (seed, purpose, index, ...)

Every random draw in the toolkit comes from a generator derived from a key
tuple, so results do not depend on the order or thread in which episodes are
produced.
"""
import numpy as np

# purpose tags, the second element of every key
META_TRAIN = 0
META_TEST = 1
OBSERVATION_MAP = 2
INIT = 3
TRAIN_NOISE = 4
EVAL_NOISE = 5
BASELINE = 6


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """
    Generator for the key (seed, *keys).

    The key length is part of the entropy. SeedSequence zero-pads short
    entropy, so without it (s, a, b) and (s, a, b, 0) would share a stream.
    """
    entropy = [int(seed), len(keys)] + [int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))
