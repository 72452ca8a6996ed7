"""
Episode Generator Interface - Defines the contract for episode sources
"""
from abc import ABC, abstractmethod
from typing import Iterator, List

from models.episode import Episode
from models.stream import StreamSpec


class EpisodeGenerator(ABC):
    """
    Abstract source of continual-learning episodes.

    Episodes are addressed by index so that any episode can be regenerated on
    its own, in any order and on any worker, with identical contents.
    """

    @property
    @abstractmethod
    def spec(self) -> StreamSpec:
        """Stream layout shared by every episode of this source."""
        pass

    @abstractmethod
    def episode(self, index: int) -> Episode:
        """
        Build the episode at `index`.

        Args:
            index: episode index, 0 <= index < len(self)

        Returns:
            Episode: the deterministic episode for this index

        Raises:
            IndexError: If the index is outside the source
        """
        pass

    @abstractmethod
    def __len__(self) -> int:
        """Number of episodes this source provides."""
        pass

    def __iter__(self) -> Iterator[Episode]:
        for index in range(len(self)):
            yield self.episode(index)

    def batch(self, start: int, count: int) -> List[Episode]:
        """Episodes start, start+1, ... wrapping around the source."""
        return [self.episode((start + i) % len(self)) for i in range(count)]
