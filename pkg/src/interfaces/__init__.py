"""Interface definitions for SB-MCL components"""

from .episode_generator import EpisodeGenerator
from .observation_learner import ObservationLearner
from .head import Head
