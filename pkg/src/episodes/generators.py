"""
Episode Generators - synthetic sine, classification and density episodes

Each task of an episode draws from its own random stream keyed by
(seed, split, episode index, task index), and the training stream is the
concatenation of the task streams in task order.
"""
import logging
import math
from typing import Callable, List, Optional, Tuple

import numpy as np

from interfaces.episode_generator import EpisodeGenerator
from models.episode import Episode, TaskParams
from models.stream import Domain, StreamSpec

from .seeding import META_TEST, META_TRAIN, OBSERVATION_MAP, derive_rng

logger = logging.getLogger(__name__)

AMPLITUDE_RANGE = (0.1, 5.0)
PHASE_RANGE = (0.0, math.pi)
SINE_INPUT_RANGE = (-5.0, 5.0)

ObservationMap = Callable[[np.ndarray], np.ndarray]


class StreamGenerator(EpisodeGenerator):
    """
    Shared indexing and task-blocked assembly; subclasses draw one task.
    """

    domain: Domain

    def __init__(self, spec: StreamSpec, split: int = META_TRAIN,
                 num_episodes: Optional[int] = None):
        if spec.domain is not self.domain:
            raise ValueError(f"{type(self).__name__} needs domain {self.domain.value!r}, "
                             f"got {spec.domain.value!r}")
        if num_episodes is not None and num_episodes < 1:
            raise ValueError("num_episodes must be at least 1")
        self._spec = spec
        self._split = split
        self._num_episodes = num_episodes

    @property
    def spec(self) -> StreamSpec:
        return self._spec

    @property
    def split(self) -> int:
        return self._split

    def __len__(self) -> int:
        return self._num_episodes if self._num_episodes is not None else 2 ** 31

    def context_seed(self, index: int) -> Tuple[int, int, int]:
        """Key of the random stream shared by all tasks of an episode."""
        return (self._spec.seed, self._split, index)

    def task_seed(self, index: int, task: int) -> Tuple[int, int, int, int]:
        """Key of the random stream that generates one task."""
        return (self._spec.seed, self._split, index, task)

    def episode(self, index: int) -> Episode:
        if not 0 <= index < len(self):
            raise IndexError(f"episode index {index} outside 0..{len(self) - 1}")
        spec = self._spec
        episode_rng = derive_rng(*self.context_seed(index))
        context = self._episode_context(episode_rng)

        train_x, train_y, test_x, test_y, tasks = [], [], [], [], []
        for k in range(spec.num_tasks):
            rng = derive_rng(*self.task_seed(index, k))
            params, draw = self._task(k, rng, context)
            tasks.append(params)
            x, y = draw(rng, spec.shots)
            train_x.append(x)
            train_y.append(y)
            x, y = draw(rng, spec.test_per_task)
            test_x.append(x)
            test_y.append(y)

        train_ids = np.repeat(np.arange(spec.num_tasks), spec.shots)
        test_ids = np.repeat(np.arange(spec.num_tasks), spec.test_per_task)
        return Episode(
            spec=spec,
            train_x=np.concatenate(train_x),
            train_y=None if train_y[0] is None else np.concatenate(train_y),
            train_task_ids=train_ids,
            test_x=np.concatenate(test_x),
            test_y=None if test_y[0] is None else np.concatenate(test_y),
            test_task_ids=test_ids,
            index=index,
            tasks=tasks,
        )

    def _episode_context(self, rng: np.random.Generator):
        return None

    def _task(self, k: int, rng: np.random.Generator, context):
        """Return (TaskParams, draw) where draw(rng, n) -> (x, y)."""
        raise NotImplementedError


class SineGenerator(StreamGenerator):
    """
    Sine regression: y = amplitude * sin(u + phase).

    Inputs are (u, one-hot task slot); each task of an episode occupies a
    distinct slot so test queries identify which wave they belong to.
    """

    domain = Domain.SINE

    def _episode_context(self, rng):
        return rng.choice(self._spec.task_slots, size=self._spec.num_tasks, replace=False)

    def _task(self, k, rng, slots):
        amplitude = rng.uniform(*AMPLITUDE_RANGE)
        phase = rng.uniform(*PHASE_RANGE)
        slot = int(slots[k])
        width = self._spec.task_slots

        def draw(rng, n):
            u = rng.uniform(*SINE_INPUT_RANGE, size=n)
            x = np.zeros((n, 1 + width))
            x[:, 0] = u
            x[:, 1 + slot] = 1.0
            return x, sine_target(u, amplitude, phase).reshape(n, 1)

        return TaskParams(task_index=k, amplitude=amplitude, phase=phase, slot=slot), draw


def sine_target(u, amplitude: float, phase: float):
    return amplitude * np.sin(np.asarray(u, dtype=np.float64) + phase)


def random_observation_map(seed: int, dim: int) -> ObservationMap:
    """
    Fixed two-layer nonlinear map R^dim -> R^dim shared by all episodes of a seed.
    """
    rng = derive_rng(seed, OBSERVATION_MAP)
    hidden = 2 * dim
    w1 = rng.standard_normal((dim, hidden)) / math.sqrt(dim)
    b1 = 0.1 * rng.standard_normal(hidden)
    w2 = rng.standard_normal((hidden, dim)) / math.sqrt(hidden)

    def apply(v: np.ndarray) -> np.ndarray:
        return np.tanh(v @ w1 + b1) @ w2

    return apply


def identity_map(v: np.ndarray) -> np.ndarray:
    return np.array(v, dtype=np.float64)


class ClassifyGenerator(StreamGenerator):
    """
    Classification: task k is label k with prototype p ~ N(0, I) and samples
    g(p + noise_scale * n).
    """

    domain = Domain.CLASSIFY

    def __init__(self, spec: StreamSpec, split: int = META_TRAIN,
                 num_episodes: Optional[int] = None,
                 observation_map: Optional[ObservationMap] = None):
        super().__init__(spec, split, num_episodes)
        self.observation_map = observation_map or random_observation_map(spec.seed, spec.input_dim)

    def _task(self, k, rng, context):
        dim = self._spec.input_dim
        prototype = rng.standard_normal(dim)
        sigma = self._spec.noise_scale

        def draw(rng, n):
            latent = prototype + sigma * rng.standard_normal((n, dim))
            return self.observation_map(latent), np.full(n, k, dtype=np.int64)

        return TaskParams(task_index=k, prototype=prototype), draw


class DensityGenerator(StreamGenerator):
    """
    Density estimation: task k is a mode at c ~ N(0, I); samples c + noise_scale * n.
    """

    domain = Domain.DENSITY

    def _task(self, k, rng, context):
        dim = self._spec.input_dim
        center = rng.standard_normal(dim)
        sigma = self._spec.noise_scale

        def draw(rng, n):
            return center + sigma * rng.standard_normal((n, dim)), None

        return TaskParams(task_index=k, center=center), draw


GENERATORS = {
    Domain.SINE: SineGenerator,
    Domain.CLASSIFY: ClassifyGenerator,
    Domain.DENSITY: DensityGenerator,
}


def make_generator(spec: StreamSpec, split: int = META_TRAIN,
                   num_episodes: Optional[int] = None) -> StreamGenerator:
    return GENERATORS[spec.domain](spec, split=split, num_episodes=num_episodes)


def gen_sine_episode(spec: StreamSpec, index: int = 0, split: int = META_TRAIN) -> Episode:
    return SineGenerator(spec, split).episode(index)


def gen_classify_episode(spec: StreamSpec, index: int = 0, split: int = META_TRAIN) -> Episode:
    return ClassifyGenerator(spec, split).episode(index)


def gen_density_episode(spec: StreamSpec, index: int = 0, split: int = META_TRAIN) -> Episode:
    return DensityGenerator(spec, split).episode(index)


def meta_split(spec: StreamSpec, n_train_episodes: int,
               n_test_episodes: int) -> Tuple[StreamGenerator, StreamGenerator]:
    """
    Meta-training and meta-test sources over disjoint seed subspaces.

    Task streams are keyed by split tag, so no task of the meta-test source is
    ever generated by the meta-training source.
    """
    if n_train_episodes < 1 or n_test_episodes < 1:
        raise ValueError("episode counts must be at least 1")
    train = make_generator(spec, META_TRAIN, n_train_episodes)
    test = make_generator(spec, META_TEST, n_test_episodes)
    logger.debug("meta split: %d train / %d test episodes of %s",
                 n_train_episodes, n_test_episodes, spec.domain.value)
    return train, test
