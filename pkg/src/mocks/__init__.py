"""Deterministic test doubles for the SB-MCL interfaces"""

from .mock_learner import MockLearner
from .mock_episode_generator import MockEpisodeGenerator
