"""
Meta Trainer - bi-level meta-training of a head over many episodes

Each meta-step draws a meta-batch of episodes, evaluates every episode's loss
on its own tape (batch inference path), averages the first-order gradients in
episode order and applies one Adam update.
"""
import logging
import math
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from autodiff import AdamState, Tape, adam_step
from episodes import make_generator
from episodes.seeding import INIT, META_TRAIN, TRAIN_NOISE, derive_rng
from exceptions.sbmcl_exceptions import (
    DivergenceException,
    InvalidPosteriorException,
    NonFiniteException,
    SBMCLException,
)
from interfaces.episode_generator import EpisodeGenerator
from models.checkpoint import Checkpoint
from models.config import MetaConfig
from networks.heads import SBMCLHead, build_head

from .workers import map_ordered, worker_count

logger = logging.getLogger(__name__)


class TrainerState(Enum):
    IDLE = "idle"
    TRAINING = "training"
    FINISHED = "finished"
    DIVERGED = "diverged"


class MetaTrainer:
    """
    Owns the parameters, the optimizer state and the loss curve of one run.

    Parameters are only replaced at the single synchronization point at the
    end of a meta-step; episode workers read them and write nothing shared.
    """

    def __init__(self, config: MetaConfig, generator: Optional[EpisodeGenerator] = None,
                 head: Optional[SBMCLHead] = None, num_threads: Optional[int] = None):
        """
        Initialize trainer.

        Args:
            config: run configuration
            generator: meta-training episode source (defaults to the config's stream)
            head: head to train (defaults to build_head(config))
            num_threads: episode workers (defaults to SBMCL_NUM_THREADS)
        """
        self.config = config
        self.head = head or build_head(config)
        self.generator = generator or make_generator(config.stream, META_TRAIN,
                                                     config.meta_train_episodes)
        self.num_threads = num_threads or worker_count()
        self.params: Dict[str, np.ndarray] = self.head.init_params(derive_rng(config.seed, INIT))
        self.optimizer = AdamState.zeros_like(self.params)
        self.loss_curve: List[Tuple[int, float]] = []
        self.step_count = 0
        self._state = TrainerState.IDLE

    def get_state(self) -> TrainerState:
        return self._state

    def episode_indices(self, step: int) -> List[int]:
        batch = self.config.meta_batch
        return [(step * batch + b) % len(self.generator) for b in range(batch)]

    def episode_gradient(self, step: int, slot: int, index: int) -> Tuple[float, Dict[str, np.ndarray]]:
        """Loss and parameter gradients of one episode of the meta-batch."""
        episode = self.generator.episode(index)
        tape = Tape()
        values = tape.params(self.params)
        rng = derive_rng(self.config.seed, TRAIN_NOISE, step, slot)
        loss = self.head.loss(values, episode, rng)
        return loss.item(), tape.backward(loss)

    def train_step(self) -> float:
        """
        Run one meta-step and return the meta-batch mean loss.

        Raises:
            DivergenceException: If any episode loss or gradient is not finite
        """
        step = self.step_count
        indices = self.episode_indices(step)
        try:
            results = map_ordered(lambda job: self.episode_gradient(step, *job),
                                  list(enumerate(indices)), self.num_threads)
        except (NonFiniteException, InvalidPosteriorException) as e:
            self._diverge(step, float("nan"), str(e))

        mean_loss = math.fsum(loss for loss, _ in results) / len(results)
        if not math.isfinite(mean_loss):
            self._diverge(step, mean_loss, "non-finite meta-batch loss")
        grads = {}
        for name in self.params:
            total = results[0][1][name].copy()
            for _, g in results[1:]:
                total += g[name]
            grads[name] = total / len(results)
            if not np.all(np.isfinite(grads[name])):
                self._diverge(step, mean_loss, f"non-finite gradient for {name}")

        self.params, self.optimizer = adam_step(self.params, grads, self.optimizer, lr=self.config.lr)
        self.loss_curve.append((step, mean_loss))
        self.step_count += 1
        if step % self.config.log_every == 0:
            logger.info("step %d: loss %.6g (episodes %d..%d)", step, mean_loss,
                        indices[0], indices[-1])
        return mean_loss

    def _diverge(self, step: int, loss: float, reason: str):
        self._state = TrainerState.DIVERGED
        logger.error("meta-training diverged at step %d: %s", step, reason)
        raise DivergenceException(step, loss)

    def train(self, steps: Optional[int] = None) -> Checkpoint:
        """
        Run `steps` meta-steps (default: config.steps) and return the checkpoint.

        Raises:
            DivergenceException: If training produces a non-finite loss
            SBMCLException: If the trainer already diverged
        """
        if self._state is TrainerState.DIVERGED:
            raise SBMCLException("trainer has diverged; start a new run")
        steps = self.config.steps if steps is None else steps
        self._state = TrainerState.TRAINING
        logger.info("meta-training %s head on %s for %d steps (%d parameters)",
                    self.config.head.value, self.config.stream.domain.value, steps,
                    sum(p.size for p in self.params.values()))
        for _ in range(steps):
            self.train_step()
        self._state = TrainerState.FINISHED
        if self.loss_curve:
            logger.info("finished at step %d: loss %.6g", self.step_count, self.loss_curve[-1][1])
        return self.checkpoint()

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(self.config, dict(self.params), list(self.loss_curve))


def meta_train(config: MetaConfig, generator: Optional[EpisodeGenerator] = None,
               num_threads: Optional[int] = None) -> Checkpoint:
    """Meta-train a fresh head for `config.steps` steps."""
    return MetaTrainer(config, generator=generator, num_threads=num_threads).train()
