"""Deterministic synthetic episode generators"""

from .seeding import derive_rng, META_TRAIN, META_TEST
from .generators import (
    StreamGenerator,
    SineGenerator,
    ClassifyGenerator,
    DensityGenerator,
    make_generator,
    gen_sine_episode,
    gen_classify_episode,
    gen_density_episode,
    meta_split,
    identity_map,
    random_observation_map,
    sine_target,
)
from .serialization import dump_episode, load_episode
