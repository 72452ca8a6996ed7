"""
Stream Spec Model - Describes how an episode's training stream is assembled
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional


class Domain(Enum):
    """Synthetic task families."""
    SINE = "sine"
    CLASSIFY = "synth-classify"
    DENSITY = "synth-density"


DEFAULT_INPUT_DIM = {Domain.CLASSIFY: 16, Domain.DENSITY: 4}
DEFAULT_NOISE_SCALE = {Domain.CLASSIFY: 0.3, Domain.DENSITY: 0.2}


@dataclass
class StreamSpec:
    """
    K-task N-shot stream layout plus the test set size per task.
    """
    domain: Domain = Domain.SINE
    num_tasks: int = 10
    shots: int = 10
    test_per_task: int = 5
    seed: int = 0
    input_dim: Optional[int] = None
    noise_scale: Optional[float] = None
    task_slots: int = 64

    def __post_init__(self):
        """Validate counts and resolve domain defaults."""
        if isinstance(self.domain, str):
            self.domain = Domain(self.domain)
        if self.num_tasks < 1:
            raise ValueError("num_tasks must be at least 1")
        if self.shots < 1:
            raise ValueError("shots must be at least 1")
        if self.test_per_task < 1:
            raise ValueError("test_per_task must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.domain is Domain.SINE and self.num_tasks > self.task_slots:
            raise ValueError(f"sine streams support at most task_slots={self.task_slots} tasks")

        if self.input_dim is None:
            self.input_dim = DEFAULT_INPUT_DIM.get(self.domain)
        if self.noise_scale is None:
            self.noise_scale = DEFAULT_NOISE_SCALE.get(self.domain)

    @property
    def stream_length(self) -> int:
        return self.num_tasks * self.shots

    @property
    def test_size(self) -> int:
        return self.num_tasks * self.test_per_task

    @property
    def x_dim(self) -> int:
        """Width of one input row."""
        if self.domain is Domain.SINE:
            return 1 + self.task_slots
        return self.input_dim

    def with_setting(self, num_tasks: int, shots: int) -> "StreamSpec":
        """Same spec with a different (K, shots) setting."""
        data = self.to_dict()
        data.update(num_tasks=num_tasks, shots=shots)
        return StreamSpec.from_dict(data)

    def to_dict(self) -> dict:
        return {
            'domain': self.domain.value,
            'num_tasks': self.num_tasks,
            'shots': self.shots,
            'test_per_task': self.test_per_task,
            'seed': self.seed,
            'input_dim': self.input_dim,
            'noise_scale': self.noise_scale,
            'task_slots': self.task_slots,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StreamSpec":
        return cls(**data)
