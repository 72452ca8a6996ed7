"""
Baselines - standard training of the model trunk on a single episode

The trunk is the generic head's model network with the latent pinned to zero,
so the baselines share the SB-MCL model capacity but have no learner.

    online   one pass of single-example SGD over the shuffled stream
    offline  Adam on uniform mini-batches from the whole stream, up to a step
             cap, reporting the best test score seen
"""
import logging
from dataclasses import replace
from typing import Dict, Mapping, Optional

import numpy as np

from autodiff import AdamState, Tape, Value, adam_step, sgd_step
from autodiff import ops
from episodes import make_generator
from episodes.seeding import BASELINE, META_TEST, derive_rng
from models.config import HeadKind, MetaConfig, PredictMode
from models.episode import Episode
from models.metrics import MetricsRow
from models.stream import StreamSpec
from networks.heads import GenericHead, METRIC_BY_DOMAIN, as_constants
from networks.model_net import ModelNet
from networks.objectives import METRICS, predict
from posteriors import FactorizedGaussian

from .evaluator import summarize
from .workers import map_ordered

logger = logging.getLogger(__name__)


def trunk_model(config: MetaConfig, spec: StreamSpec) -> ModelNet:
    """Generic-head model network for `spec`'s domain."""
    generic = replace(config, head=HeadKind.GENERIC, stream=spec)
    return GenericHead(generic).model


def _targets(episode: Episode, rows) -> Optional[np.ndarray]:
    return None if episode.train_y is None else episode.train_y[rows]


def trunk_loss(model: ModelNet, params: Mapping[str, Value], x, y) -> Value:
    """Mean negative log-likelihood of a batch with z = 0."""
    z = np.zeros(model.z_dim)
    return -ops.mean(model.log_likelihood(params, x, y, z))


def trunk_score(model: ModelNet, params: Mapping[str, np.ndarray], episode: Episode) -> float:
    prior = FactorizedGaussian.unit(model.z_dim)
    prediction = predict(model, as_constants(params), prior, episode.test_x, PredictMode.MAP)
    return METRICS[METRIC_BY_DOMAIN[episode.domain]](prediction, episode.test_y)


def _gradients(model: ModelNet, params: Dict[str, np.ndarray], x, y):
    tape = Tape()
    values = tape.params(params)
    loss = trunk_loss(model, values, x, y)
    return tape.backward(loss)


def train_online(model: ModelNet, episode: Episode, rng: np.random.Generator,
                 lr: float) -> Dict[str, np.ndarray]:
    """Fresh trunk trained for one epoch of single-example SGD over the shuffled stream."""
    params = model.init_params(rng)
    for t in rng.permutation(episode.stream_length):
        rows = slice(t, t + 1)
        grads = _gradients(model, params, episode.train_x[rows], _targets(episode, rows))
        params = sgd_step(params, grads, lr)
    return params


def train_offline(model: ModelNet, episode: Episode, rng: np.random.Generator, lr: float,
                  steps: int, batch: int, eval_every: int) -> float:
    """Best test score of a fresh trunk over `steps` Adam steps, checked every `eval_every`."""
    params = model.init_params(rng)
    state = AdamState.zeros_like(params)
    best = np.inf
    for step in range(steps + 1):
        if step % eval_every == 0 or step == steps:
            best = min(best, trunk_score(model, params, episode))
        if step == steps:
            break
        rows = rng.integers(0, episode.stream_length, size=batch)
        grads = _gradients(model, params, episode.train_x[rows], _targets(episode, rows))
        params, state = adam_step(params, grads, state, lr=lr)
    return float(best)


def baseline_online(config: MetaConfig, spec: Optional[StreamSpec] = None,
                    n_episodes: Optional[int] = None, lr: Optional[float] = None,
                    num_threads: Optional[int] = None) -> MetricsRow:
    """Online baseline over meta-test episodes; lr defaults to config.online_lr."""
    spec = spec or config.stream
    n_episodes = n_episodes or config.eval_episodes
    lr = config.online_lr if lr is None else lr
    model = trunk_model(config, spec)
    generator = make_generator(spec, META_TEST, n_episodes)

    def run(index: int) -> float:
        episode = generator.episode(index)
        params = train_online(model, episode, derive_rng(spec.seed, BASELINE, index), lr)
        return trunk_score(model, params, episode)

    row = summarize("online", spec, METRIC_BY_DOMAIN[spec.domain],
                    map_ordered(run, range(n_episodes), num_threads))
    logger.info("online baseline K=%d shots=%d: %s=%.6g", row.num_tasks, row.shots,
                row.metric, row.mean)
    return row


def baseline_offline(config: MetaConfig, spec: Optional[StreamSpec] = None,
                     n_episodes: Optional[int] = None, steps: Optional[int] = None,
                     lr: Optional[float] = None, num_threads: Optional[int] = None) -> MetricsRow:
    """Offline baseline over meta-test episodes; knobs default to the config's offline_* fields."""
    spec = spec or config.stream
    n_episodes = n_episodes or config.eval_episodes
    steps = config.offline_steps if steps is None else steps
    lr = config.offline_lr if lr is None else lr
    model = trunk_model(config, spec)
    generator = make_generator(spec, META_TEST, n_episodes)

    def run(index: int) -> float:
        episode = generator.episode(index)
        return train_offline(model, episode, derive_rng(spec.seed, BASELINE, index), lr, steps,
                             config.offline_batch, config.offline_eval_every)

    row = summarize("offline", spec, METRIC_BY_DOMAIN[spec.domain],
                    map_ordered(run, range(n_episodes), num_threads))
    logger.info("offline baseline K=%d shots=%d (cap %d): %s=%.6g", row.num_tasks, row.shots,
                steps, row.metric, row.mean)
    return row
