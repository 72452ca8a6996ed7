"""
Mock Episode Generator - Test implementation of EpisodeGenerator interface
"""
from typing import List

from interfaces.episode_generator import EpisodeGenerator
from models.episode import Episode
from models.stream import StreamSpec


class MockEpisodeGenerator(EpisodeGenerator):
    """
    Serves a fixed list of episodes and records which indices were requested.
    """

    def __init__(self, episodes: List[Episode]):
        if not episodes:
            raise ValueError("at least one episode is required")
        self._episodes = list(episodes)
        self.requested: List[int] = []

    @property
    def spec(self) -> StreamSpec:
        return self._episodes[0].spec

    def episode(self, index: int) -> Episode:
        if not 0 <= index < len(self._episodes):
            raise IndexError(f"episode index {index} outside 0..{len(self._episodes) - 1}")
        self.requested.append(index)
        return self._episodes[index]

    def __len__(self) -> int:
        return len(self._episodes)
