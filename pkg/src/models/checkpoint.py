"""
Checkpoint Model - Trained parameters together with the config that shaped them
"""
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .config import MetaConfig


@dataclass
class Checkpoint:
    """
    Parameters in storage order plus the training loss curve.
    """
    config: MetaConfig
    params: Dict[str, np.ndarray]
    loss_curve: List[Tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        """Store parameters as read-only float64 arrays."""
        frozen = {}
        for name, array in self.params.items():
            array = np.array(array, dtype=np.float64)
            array.setflags(write=False)
            frozen[name] = array
        self.params = frozen

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def same_params(self, other: "Checkpoint") -> bool:
        """Bitwise comparison of parameter names, shapes and values."""
        if list(self.params) != list(other.params):
            return False
        return all(
            self.params[k].shape == other.params[k].shape
            and self.params[k].tobytes() == other.params[k].tobytes()
            for k in self.params
        )
