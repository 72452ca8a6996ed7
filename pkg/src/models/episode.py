"""
Episode Model - One continual-learning problem instance
"""
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .stream import Domain, StreamSpec


@dataclass
class TaskParams:
    """
    Parameters of one stationary task inside an episode.

    Only the fields of the episode's domain are set.
    """
    task_index: int
    amplitude: Optional[float] = None
    phase: Optional[float] = None
    slot: Optional[int] = None
    prototype: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("amplitude", "phase"):
            value = getattr(self, name)
            if value is not None and not np.isfinite(value):
                raise ValueError(f"{name} must be finite")
        for name in ("prototype", "center"):
            value = getattr(self, name)
            if value is not None and not np.all(np.isfinite(value)):
                raise ValueError(f"{name} must be finite")


@dataclass
class Episode:
    """
    Ordered training stream plus a held-out test set.

    Inputs are (rows, x_dim) float arrays. Targets are (rows, 1) floats for
    regression, (rows,) integer labels for classification and None for
    density estimation.
    """
    spec: StreamSpec
    train_x: np.ndarray
    train_y: Optional[np.ndarray]
    train_task_ids: np.ndarray
    test_x: np.ndarray
    test_y: Optional[np.ndarray]
    test_task_ids: np.ndarray
    index: int = 0
    tasks: List[TaskParams] = field(default_factory=list)

    def __post_init__(self):
        """Validate that arrays agree in length and presence of targets."""
        if self.train_x.ndim != 2 or self.test_x.ndim != 2:
            raise ValueError("inputs must be 2-D arrays")
        if len(self.train_task_ids) != len(self.train_x):
            raise ValueError("train_task_ids length does not match train_x")
        if len(self.test_task_ids) != len(self.test_x):
            raise ValueError("test_task_ids length does not match test_x")
        if self.is_unsupervised:
            if self.train_y is not None or self.test_y is not None:
                raise ValueError("density episodes carry no targets")
        else:
            if self.train_y is None or self.test_y is None:
                raise ValueError("supervised episodes need targets")
            if len(self.train_y) != len(self.train_x) or len(self.test_y) != len(self.test_x):
                raise ValueError("target length does not match inputs")

    @property
    def domain(self) -> Domain:
        return self.spec.domain

    @property
    def is_classification(self) -> bool:
        return self.spec.domain is Domain.CLASSIFY

    @property
    def is_regression(self) -> bool:
        return self.spec.domain is Domain.SINE

    @property
    def is_unsupervised(self) -> bool:
        return self.spec.domain is Domain.DENSITY

    @property
    def stream_length(self) -> int:
        return len(self.train_x)

    @property
    def test_size(self) -> int:
        return len(self.test_x)

    def is_task_blocked(self) -> bool:
        """True when task ids are non-decreasing with exactly `shots` per task."""
        ids = np.asarray(self.train_task_ids)
        if np.any(np.diff(ids) < 0):
            return False
        counts = np.bincount(ids, minlength=self.spec.num_tasks)
        return bool(np.all(counts == self.spec.shots))

    def permuted(self, order: Sequence[int]) -> "Episode":
        """Copy with the training stream reordered by `order`."""
        order = np.asarray(order)
        if sorted(order.tolist()) != list(range(self.stream_length)):
            raise ValueError("order must be a permutation of the training stream")
        return replace(
            self,
            train_x=self.train_x[order],
            train_y=None if self.train_y is None else self.train_y[order],
            train_task_ids=self.train_task_ids[order],
        )

    def to_dict(self) -> dict:
        """Summary for logs and JSON output."""
        return {
            'spec': self.spec.to_dict(),
            'index': self.index,
            'stream_length': self.stream_length,
            'test_size': self.test_size,
        }
