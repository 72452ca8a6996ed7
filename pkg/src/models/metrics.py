"""
Metrics Models - Per-episode loss reports and aggregated metric rows
"""
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from exceptions.sbmcl_exceptions import NonFiniteException

METRIC_NAMES = ("error_rate", "mse", "nll")
CSV_COLUMNS = ("head", "K", "shots", "metric", "mean", "std", "n", "seed")


@dataclass
class MetricsRow:
    """
    Mean and spread of one metric at one (K, shots) setting.
    """
    head: str
    num_tasks: int
    shots: int
    metric: str
    mean: float
    std: float
    n_runs: int
    seed: int = 0

    def __post_init__(self):
        """Validate metric name and ranges."""
        if self.metric not in METRIC_NAMES:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.std < 0:
            raise ValueError("std must be non-negative")
        if self.n_runs < 1:
            raise ValueError("n_runs must be positive")
        if self.metric == "error_rate" and not 0.0 <= self.mean <= 1.0:
            raise ValueError("error_rate must lie in [0, 1]")

    @property
    def setting(self):
        return (self.num_tasks, self.shots)

    def to_csv_row(self) -> list:
        """Values in CSV_COLUMNS order; floats use repr for exact round trips."""
        return [self.head, self.num_tasks, self.shots, self.metric,
                repr(float(self.mean)), repr(float(self.std)), self.n_runs, self.seed]

    def to_dict(self) -> dict:
        return {
            'head': self.head,
            'K': self.num_tasks,
            'shots': self.shots,
            'metric': self.metric,
            'mean': float(self.mean),
            'std': float(self.std),
            'n': self.n_runs,
            'seed': self.seed,
        }


@dataclass
class EpisodeLossReport:
    """
    Terms of the episode evidence lower bound.

    elbo = -(nll_test + nll_train) - kl, where the likelihood terms are sums over
    the test set and the training stream averaged over the z draws.
    `loss` is the differentiable negative ELBO.
    """
    elbo: float
    nll_train: float
    nll_test: float
    kl: float
    z_draws: np.ndarray
    loss: Optional[Any] = field(default=None, repr=False)

    def __post_init__(self):
        """Reject non-finite terms."""
        for name in ("elbo", "nll_train", "nll_test", "kl"):
            if not np.isfinite(getattr(self, name)):
                raise NonFiniteException(f"{name} is not finite")

    def to_dict(self) -> dict:
        return {
            'elbo': self.elbo,
            'nll_train': self.nll_train,
            'nll_test': self.nll_test,
            'kl': self.kl,
            'n_z': int(len(self.z_draws)),
        }
