"""
Head Interface - Defines the contract for the special cases of SB-MCL
"""
from abc import ABC, abstractmethod
from typing import Dict, Mapping

import numpy as np

from autodiff import Value
from models.config import HeadKind, PredictMode
from models.episode import Episode


class Head(ABC):
    """
    Abstract model + learner pair that turns a training stream into a
    posterior and the posterior into predictions.

    Implementations cover the generic latent-injection variant and the
    special-case heads with analytic posteriors.
    """

    kind: HeadKind

    @property
    @abstractmethod
    def metric(self) -> str:
        """Name of the evaluation metric this head reports."""
        pass

    @abstractmethod
    def init_params(self, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        """
        Create initial parameters in a fixed storage order.

        Returns:
            Dict[str, np.ndarray]: parameter arrays by name
        """
        pass

    @abstractmethod
    def loss(self, params: Mapping[str, Value], episode: Episode,
             rng: np.random.Generator) -> Value:
        """
        Meta-training objective for one episode (batch inference path).

        Returns:
            Value: scalar loss to minimize

        Raises:
            HeadMismatchException: If the episode domain is not supported
        """
        pass

    @abstractmethod
    def predict(self, params: Mapping[str, Value], episode: Episode, mode: PredictMode,
                rng: np.random.Generator, sequential: bool = True):
        """
        Learn the training stream and predict the test set.

        Args:
            sequential: fold the stream one example at a time (True) or use
                the batch rule (False)

        Returns:
            Prediction: predictive quantities for every test example
        """
        pass

    @abstractmethod
    def score(self, prediction, episode: Episode) -> float:
        """Evaluation metric of a prediction against the episode's test targets."""
        pass
