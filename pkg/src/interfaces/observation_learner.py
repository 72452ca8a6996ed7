"""
Observation Learner Interface - Defines the contract for learners
"""
from abc import ABC, abstractmethod
from typing import Dict, Mapping, Tuple

import numpy as np

from autodiff import Value


class ObservationLearner(ABC):
    """
    Abstract learner that turns training examples into noisy observations of z.

    The learner only runs forward passes; it never changes during an episode.
    """

    @property
    @abstractmethod
    def z_dim(self) -> int:
        """Dimension of the latent z."""
        pass

    @abstractmethod
    def init_params(self, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        """
        Create initial parameters.

        Returns:
            Dict[str, np.ndarray]: parameter arrays by name (may be empty)
        """
        pass

    @abstractmethod
    def observe(self, params: Mapping[str, Value], x, y=None) -> Tuple[Value, Value]:
        """
        Emit observations for a batch of examples.

        Args:
            params: parameter Values by name
            x: (T, x_dim) inputs
            y: targets, or None for unsupervised streams

        Returns:
            Tuple[Value, Value]: z_hat and precision, both (T, z_dim)

        Raises:
            NonFiniteException: If the network output is not finite
        """
        pass
