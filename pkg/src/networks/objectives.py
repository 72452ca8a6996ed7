"""
Objectives - episode evidence lower bounds, predictions and metrics

The supervised bound of an episode is

    E_q[ sum_n log p(y~_n | x~_n, z) + sum_t log p(y_t | x_t, z) ] - KL(q || N(0, I))

with q the posterior after the training stream; the unsupervised bound drops
y and scores x instead. The constant log p(D) term is left out.
"""
from dataclasses import dataclass, field
from typing import Hashable, List, Mapping, Optional

import numpy as np
from scipy.special import logsumexp

from autodiff import Value
from autodiff import ops
from exceptions.sbmcl_exceptions import ShapeMismatchException
from interfaces.observation_learner import ObservationLearner
from models.config import PredictMode
from models.episode import Episode
from models.metrics import EpisodeLossReport
from posteriors import FactorizedGaussian, kl_to, map_point, reparam_sample

from .learner import learn_stream
from .model_net import Likelihood, ModelNet


def draw_eps(rng: Optional[np.random.Generator], n_z: int, dim: int) -> np.ndarray:
    rng = rng if rng is not None else np.random.default_rng(0)
    return rng.standard_normal((n_z, dim))


def _episode_elbo(model: ModelNet, learner: ObservationLearner, params: Mapping[str, Value],
                  prior: FactorizedGaussian, episode: Episode, n_z: int,
                  rng: Optional[np.random.Generator], eps: Optional[np.ndarray],
                  supervised: bool) -> EpisodeLossReport:
    if n_z < 1:
        raise ValueError("n_z must be at least 1")
    train_y = episode.train_y if supervised else None
    test_y = episode.test_y if supervised else None

    posterior = learn_stream(learner, params, prior, episode.train_x, train_y, sequential=False)
    if eps is None:
        eps = draw_eps(rng, n_z, posterior.dim)
    eps = np.asarray(eps, dtype=np.float64).reshape(n_z, posterior.dim)
    z = reparam_sample(posterior, eps)

    h_train = model.encode(params, episode.train_x) if supervised else None
    h_test = model.encode(params, episode.test_x) if supervised else None
    ll_train, ll_test = 0.0, 0.0
    for s in range(n_z):
        ll_test = ll_test + ops.sum_(model.log_likelihood(params, episode.test_x, test_y, z[s], h_test))
        if len(episode.train_x):
            ll_train = ll_train + ops.sum_(
                model.log_likelihood(params, episode.train_x, train_y, z[s], h_train))
    nll_test = -ll_test / n_z
    nll_train = -ll_train / n_z if len(episode.train_x) else Value(0.0)
    kl = kl_to(posterior, FactorizedGaussian.unit(posterior.dim))
    loss = nll_test + nll_train + kl

    return EpisodeLossReport(
        elbo=-loss.item(),
        nll_train=nll_train.item(),
        nll_test=nll_test.item(),
        kl=kl.item(),
        z_draws=z.numpy(),
        loss=loss,
    )


def elbo_supervised(model: ModelNet, learner: ObservationLearner, params: Mapping[str, Value],
                    prior: FactorizedGaussian, episode: Episode, n_z: int = 5,
                    rng: Optional[np.random.Generator] = None,
                    eps: Optional[np.ndarray] = None) -> EpisodeLossReport:
    """
    Supervised episode bound on the batch inference path.

    Args:
        eps: optional (n_z, z_dim) standard-normal draws; drawn from `rng` when omitted

    Returns:
        EpisodeLossReport: report whose `loss` is the differentiable negative bound

    Raises:
        ValueError: If n_z < 1
        InvalidPosteriorException: If the posterior is invalid
    """
    if not model.supervised:
        raise ShapeMismatchException("elbo_supervised", [], "model has no supervised likelihood")
    return _episode_elbo(model, learner, params, prior, episode, n_z, rng, eps, supervised=True)


def elbo_unsupervised(model: ModelNet, learner: ObservationLearner, params: Mapping[str, Value],
                      prior: FactorizedGaussian, episode: Episode, n_z: int = 5,
                      rng: Optional[np.random.Generator] = None,
                      eps: Optional[np.ndarray] = None) -> EpisodeLossReport:
    """Unsupervised counterpart of `elbo_supervised` scoring x alone."""
    if model.supervised:
        raise ShapeMismatchException("elbo_unsupervised", [], "model has a supervised likelihood")
    return _episode_elbo(model, learner, params, prior, episode, n_z, rng, eps, supervised=False)


@dataclass
class Prediction:
    """
    Predictive quantities for a test set.

    Regression fills `mean` and `variance` (N, d_y); classification fills
    `probs` (N, C) with `labels` naming the columns; density fills
    `log_density` (N,).
    """
    mean: Optional[np.ndarray] = None
    variance: Optional[np.ndarray] = None
    probs: Optional[np.ndarray] = None
    labels: List[Hashable] = field(default_factory=list)
    log_density: Optional[np.ndarray] = None

    def predicted_labels(self) -> np.ndarray:
        if self.probs is None:
            raise ValueError("prediction holds no class probabilities")
        return np.asarray(self.labels)[np.argmax(self.probs, axis=1)]

    def to_dict(self) -> dict:
        data = {}
        for name in ("mean", "variance", "probs", "log_density"):
            value = getattr(self, name)
            if value is not None:
                data[name] = np.asarray(value).tolist()
        if self.labels:
            data["labels"] = list(self.labels)
        return data


def softmax_rows(scores: np.ndarray) -> np.ndarray:
    return np.exp(scores - logsumexp(scores, axis=1, keepdims=True))


def predict(model: ModelNet, params: Mapping[str, Value], posterior: FactorizedGaussian, x,
            mode: PredictMode = PredictMode.MC, n_z: int = 5,
            rng: Optional[np.random.Generator] = None,
            eps: Optional[np.ndarray] = None) -> Prediction:
    """
    Predict with z at the posterior mode (MAP) or averaged over `n_z` draws (MC).

    MC averages in probability space: regression returns the moments of the
    Gaussian mixture, classification averages class probabilities, density
    averages densities.
    """
    if mode is PredictMode.MAP:
        draws = [map_point(posterior)]
    else:
        if eps is None:
            eps = draw_eps(rng, n_z, posterior.dim)
        samples = reparam_sample(posterior, np.asarray(eps, dtype=np.float64).reshape(-1, posterior.dim))
        draws = [samples[s] for s in range(samples.shape[0])]
    n = len(draws)

    if model.likelihood is Likelihood.MIXTURE:
        per_draw = np.stack([model.log_likelihood(params, x, None, z).data for z in draws])
        return Prediction(log_density=logsumexp(per_draw, axis=0) - np.log(n))

    h = model.encode(params, x)
    outputs = np.stack([model.decode(params, h, z).data for z in draws])
    if model.likelihood is Likelihood.GAUSSIAN:
        mean = outputs.mean(axis=0)
        noise = model.noise_variance(params).data
        spread = np.mean(np.square(outputs - mean), axis=0)
        return Prediction(mean=mean, variance=noise + spread)

    probs = np.mean([softmax_rows(o) for o in outputs], axis=0)
    return Prediction(probs=probs, labels=list(range(probs.shape[1])))


# Metrics

def mse(prediction: Prediction, targets) -> float:
    targets = np.asarray(targets, dtype=np.float64).reshape(prediction.mean.shape)
    return float(np.mean(np.square(prediction.mean - targets)))


def error_rate(prediction: Prediction, labels) -> float:
    labels = np.asarray(labels).reshape(-1)
    return float(np.mean(prediction.predicted_labels() != labels))


def nll(prediction: Prediction, targets=None) -> float:
    """Mean negative log-density of the queries (density predictions)."""
    return float(-np.mean(prediction.log_density))


METRICS = {
    "mse": mse,
    "error_rate": error_rate,
    "nll": nll,
}
