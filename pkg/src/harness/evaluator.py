"""
Evaluator - meta-test scoring of a checkpoint and generalization sweeps
"""
import logging
from typing import List, Optional, Sequence

import numpy as np

from episodes import make_generator
from episodes.seeding import EVAL_NOISE, META_TEST, derive_rng
from exceptions.sbmcl_exceptions import HeadMismatchException
from interfaces.episode_generator import EpisodeGenerator
from models.checkpoint import Checkpoint
from models.config import PredictMode
from models.metrics import MetricsRow
from models.stream import StreamSpec
from networks.heads import SBMCLHead, as_constants, build_head

from .workers import map_ordered

logger = logging.getLogger(__name__)


def summarize(head_name: str, spec: StreamSpec, metric: str, scores: Sequence[float]) -> MetricsRow:
    """Mean and population standard deviation of per-episode scores."""
    scores = np.asarray(scores, dtype=np.float64)
    return MetricsRow(
        head=head_name,
        num_tasks=spec.num_tasks,
        shots=spec.shots,
        metric=metric,
        mean=float(np.mean(scores)),
        std=float(np.std(scores)),
        n_runs=len(scores),
        seed=spec.seed,
    )


def _check_compatible(head: SBMCLHead, spec: StreamSpec) -> None:
    head.check_domain(spec.domain)
    if spec.x_dim != head.x_dim:
        raise HeadMismatchException(
            f"checkpoint expects inputs of width {head.x_dim}, stream produces {spec.x_dim}")


def episode_scores(checkpoint: Checkpoint, spec: StreamSpec, n_episodes: int,
                   mode: PredictMode = PredictMode.MAP, sequential: bool = True,
                   generator: Optional[EpisodeGenerator] = None,
                   num_threads: Optional[int] = None) -> List[float]:
    """
    Per-episode metric of the checkpoint on meta-test episodes 0..n_episodes-1.

    Raises:
        HeadMismatchException: If the checkpoint's head cannot serve `spec`
    """
    head = build_head(checkpoint.config)
    _check_compatible(head, spec)
    generator = generator or make_generator(spec, META_TEST, n_episodes)
    values = as_constants(checkpoint.params)

    def score(index: int) -> float:
        episode = generator.episode(index)
        rng = derive_rng(spec.seed, EVAL_NOISE, index)
        prediction = head.predict(values, episode, mode, rng, sequential)
        return head.score(prediction, episode)

    return map_ordered(score, range(n_episodes), num_threads)


def meta_eval(checkpoint: Checkpoint, spec: Optional[StreamSpec] = None,
              n_episodes: Optional[int] = None, mode: PredictMode = PredictMode.MAP,
              sequential: bool = True, num_threads: Optional[int] = None) -> MetricsRow:
    """
    Average metric over meta-test episodes.

    Each episode's stream is learned sequentially (or with the batch rule when
    `sequential` is False) and the test set is predicted from the posterior.
    Checkpoint parameters are only read.

    Args:
        spec: stream to evaluate on (defaults to the checkpoint's training stream)
        n_episodes: episode count (defaults to config.eval_episodes)

    Returns:
        MetricsRow: mean and std of the per-episode metric

    Raises:
        HeadMismatchException: If the checkpoint's head cannot serve `spec`
    """
    config = checkpoint.config
    spec = spec or config.stream
    n_episodes = n_episodes or config.eval_episodes
    scores = episode_scores(checkpoint, spec, n_episodes, mode, sequential,
                            num_threads=num_threads)
    row = summarize(config.head.value, spec, build_head(config).metric, scores)
    logger.info("eval %s K=%d shots=%d %s: %s=%.6g +- %.3g over %d episodes",
                row.head, row.num_tasks, row.shots, mode.value, row.metric,
                row.mean, row.std, row.n_runs)
    return row


def sweep_generalization(checkpoint: Checkpoint, base_spec: Optional[StreamSpec] = None,
                         task_grid: Sequence[int] = (10,), shot_grid: Sequence[int] = (10,),
                         n_episodes: Optional[int] = None, mode: PredictMode = PredictMode.MAP,
                         num_threads: Optional[int] = None) -> List[MetricsRow]:
    """
    Evaluate every (K, shots) of the grids without further meta-training.

    Rows follow the grids, tasks in the outer loop.

    Raises:
        ValueError: If a grid is empty
    """
    task_grid, shot_grid = list(task_grid), list(shot_grid)
    if not task_grid or not shot_grid:
        raise ValueError("task and shot grids must be non-empty")
    base_spec = base_spec or checkpoint.config.stream
    rows = []
    for num_tasks in task_grid:
        for shots in shot_grid:
            spec = base_spec.with_setting(num_tasks, shots)
            rows.append(meta_eval(checkpoint, spec, n_episodes, mode, num_threads=num_threads))
    return rows
