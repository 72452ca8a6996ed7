"""
Mock Learner - Test implementation of ObservationLearner interface
"""
from typing import Dict, Optional

import numpy as np

from autodiff import as_value
from interfaces.observation_learner import ObservationLearner


class MockLearner(ObservationLearner):
    """
    Learner that emits scripted observations instead of running a network.

    Every example observes `z_hat` with precision `precision`; both default to
    zeros, which leaves the posterior equal to the prior.
    """

    def __init__(self, z_dim: int, z_hat: Optional[np.ndarray] = None,
                 precision: Optional[np.ndarray] = None):
        """
        Initialize mock learner.

        Args:
            z_dim: Dimension of the latent
            z_hat: (z_dim,) observation repeated for every example, or (T, z_dim) rows
            precision: (z_dim,) or (T, z_dim) observation precision
        """
        self._z_dim = z_dim
        self._z_hat = np.zeros(z_dim) if z_hat is None else np.asarray(z_hat, dtype=np.float64)
        self._precision = (np.zeros(z_dim) if precision is None
                           else np.asarray(precision, dtype=np.float64))
        self.calls = 0

    @property
    def z_dim(self) -> int:
        return self._z_dim

    def init_params(self, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        return {}

    def observe(self, params, x, y=None):
        self.calls += 1
        rows = len(np.asarray(x))
        z_hat = np.broadcast_to(self._z_hat, (rows, self._z_dim)).copy()
        precision = np.broadcast_to(self._precision, (rows, self._z_dim)).copy()
        return as_value(z_hat), as_value(precision)
