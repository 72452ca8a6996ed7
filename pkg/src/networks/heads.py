"""
Heads - the generic SB-MCL variant and its special cases

    generic  learner + model, factorized Gaussian posterior over an injected z
    gemcl    encoder emits (embedding, precision); per-class Gaussian bank
    pn       encoder emits embeddings of unit precision; prototype scoring
    alpaca   feature network + matrix-normal posterior over a linear readout
"""
import logging
from abc import abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from autodiff import Value, as_value
from autodiff import ops
from exceptions.sbmcl_exceptions import HeadMismatchException
from interfaces.head import Head
from models.config import HEAD_DOMAINS, HeadKind, MetaConfig, PredictMode
from models.episode import Episode
from models.metrics import EpisodeLossReport
from models.stream import Domain
from posteriors import (
    ClassifyMode,
    ClasswiseGaussianBank,
    FactorizedGaussian,
    MatrixNormalState,
    NoisyObservation,
    bank_batch_update,
    bank_classify,
    bank_update,
    mn_batch_update,
    mn_predict,
    mn_sample_weights,
    mn_update,
)
from posteriors.factorized_gaussian import LOG_2PI

from .learner import PRECISION_FLOOR, LearnerNet, TargetKind, learn_stream
from .mlp import MLP
from .model_net import UNIT_RAW, Likelihood, ModelNet
from .objectives import (
    METRICS,
    Prediction,
    elbo_supervised,
    elbo_unsupervised,
    predict,
    softmax_rows,
)

logger = logging.getLogger(__name__)

METRIC_BY_DOMAIN = {
    Domain.SINE: "mse",
    Domain.CLASSIFY: "error_rate",
    Domain.DENSITY: "nll",
}

# PN prior: zero mean with a vanishing precision
PN_PRIOR_PRECISION = 1e-6


def as_constants(params: Mapping[str, np.ndarray]) -> Dict[str, Value]:
    """Wrap parameter arrays as constant Values (no tape, no gradients)."""
    return {name: as_value(array) for name, array in params.items()}


class SBMCLHead(Head):
    """Shared domain bookkeeping of every head."""

    kind: HeadKind

    def __init__(self, config: MetaConfig):
        self.config = config
        self.domain = config.stream.domain
        self.x_dim = config.stream.x_dim
        self.check_domain(self.domain)

    @property
    def metric(self) -> str:
        return METRIC_BY_DOMAIN[self.domain]

    def check_domain(self, domain: Domain) -> None:
        if domain not in HEAD_DOMAINS[self.kind]:
            raise HeadMismatchException(
                f"head {self.kind.value!r} does not support domain {domain.value!r}")

    def check_episode(self, episode: Episode) -> None:
        self.check_domain(episode.spec.domain)
        if episode.train_x.shape[1] != self.x_dim:
            raise HeadMismatchException(
                f"head expects inputs of width {self.x_dim}, episode has {episode.train_x.shape[1]}")

    def score(self, prediction: Prediction, episode: Episode) -> float:
        return METRICS[self.metric](prediction, episode.test_y)


class GenericHead(SBMCLHead):
    """
    Learner and model networks with a factorized Gaussian posterior over z.

    The prior N(mu_0, diag(exp(log_lam_0))^-1) is learned and starts at N(0, I).
    """

    kind = HeadKind.GENERIC

    def __init__(self, config: MetaConfig):
        super().__init__(config)
        hidden = config.hidden_sizes
        if self.domain is Domain.SINE:
            target, likelihood, out_dim = TargetKind.REGRESSION, Likelihood.GAUSSIAN, 1
        elif self.domain is Domain.CLASSIFY:
            target, likelihood, out_dim = TargetKind.LABEL, Likelihood.CATEGORICAL, config.max_classes
        else:
            target, likelihood, out_dim = TargetKind.NONE, Likelihood.MIXTURE, 0
        self.learner = LearnerNet(self.x_dim, config.z_dim, hidden, target,
                                  y_dim=1, max_classes=config.max_classes)
        self.model = ModelNet(likelihood, self.x_dim, config.z_dim, hidden, out_dim=out_dim,
                              components=config.mixture_components)

    def init_params(self, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        params = {
            "prior.mu": np.zeros(self.config.z_dim),
            "prior.log_lam": np.zeros(self.config.z_dim),
        }
        params.update(self.learner.init_params(rng))
        params.update(self.model.init_params(rng))
        return params

    def prior(self, params: Mapping[str, Value]) -> FactorizedGaussian:
        return FactorizedGaussian(params["prior.mu"], ops.exp(params["prior.log_lam"]))

    def posterior(self, params: Mapping[str, Value], episode: Episode,
                  sequential: bool = True) -> FactorizedGaussian:
        y = episode.train_y if self.model.supervised else None
        return learn_stream(self.learner, params, self.prior(params), episode.train_x, y,
                            sequential=sequential)

    def elbo(self, params: Mapping[str, Value], episode: Episode,
             rng: Optional[np.random.Generator] = None,
             eps: Optional[np.ndarray] = None) -> EpisodeLossReport:
        self.check_episode(episode)
        bound = elbo_supervised if self.model.supervised else elbo_unsupervised
        return bound(self.model, self.learner, params, self.prior(params), episode,
                     self.config.n_z, rng, eps)

    def loss(self, params, episode, rng) -> Value:
        return self.elbo(params, episode, rng).loss

    def predict(self, params, episode, mode=PredictMode.MC, rng=None, sequential=True) -> Prediction:
        self.check_episode(episode)
        posterior = self.posterior(params, episode, sequential)
        return predict(self.model, params, posterior, episode.test_x, mode,
                       n_z=self.config.n_z, rng=rng)


class _BankHead(SBMCLHead):
    """Classification heads that keep one posterior per label in a Gaussian bank."""

    def __init__(self, config: MetaConfig):
        super().__init__(config)
        self.encoder = MLP("encoder", [self.x_dim, *config.hidden_sizes, self.encoder_out])

    @property
    def encoder_out(self) -> int:
        return self.config.z_dim

    @abstractmethod
    def embed(self, params: Mapping[str, Value], x) -> Tuple[Value, Value]:
        """Encoder output (embedding, precision) for every row of x."""

    @abstractmethod
    def prior(self, params: Mapping[str, Value]) -> FactorizedGaussian:
        pass

    @abstractmethod
    def classify_mode(self, mode: PredictMode) -> ClassifyMode:
        pass

    def query_precision(self, precision: Value):
        return precision

    def bank(self, params: Mapping[str, Value], episode: Episode,
             sequential: bool = True) -> ClasswiseGaussianBank:
        self.check_episode(episode)
        bank = ClasswiseGaussianBank(self.prior(params))
        labels = [int(label) for label in episode.train_y]
        if not labels:
            return bank
        embedding, precision = self.embed(params, episode.train_x)
        if not sequential:
            return bank_batch_update(bank, labels, embedding, precision)
        for t, label in enumerate(labels):
            bank = bank_update(bank, label, NoisyObservation(embedding[t], precision[t]))
        return bank

    def scores(self, params, bank: ClasswiseGaussianBank, x, mode: PredictMode,
               rng: Optional[np.random.Generator] = None) -> Tuple[List[int], Value]:
        embedding, precision = self.embed(params, x)
        return bank_classify(bank, embedding, self.classify_mode(mode),
                             query_precision=self.query_precision(precision),
                             n_z=self.config.n_z, rng=rng)

    def loss(self, params, episode, rng) -> Value:
        """Summed cross-entropy of the softmax over bank scores on the test set."""
        bank = self.bank(params, episode, sequential=False)
        labels, scores = self.scores(params, bank, episode.test_x, PredictMode.MAP)
        column = {label: c for c, label in enumerate(labels)}
        try:
            cols = np.array([column[int(y)] for y in episode.test_y])
        except KeyError as e:
            raise ValueError(f"test label {e.args[0]} never appears in the training stream") from None
        picked = scores[np.arange(len(cols)), cols]
        return -ops.sum_(picked - ops.logsumexp(scores, axis=1))

    def predict(self, params, episode, mode=PredictMode.MC, rng=None, sequential=True) -> Prediction:
        bank = self.bank(params, episode, sequential)
        labels, scores = self.scores(params, bank, episode.test_x, mode, rng)
        return Prediction(probs=softmax_rows(scores.data), labels=list(labels))


class GeMCLHead(_BankHead):
    """
    Encoder emits an embedding and its precision for every example; each class
    keeps a factorized Gaussian posterior over its mean embedding. MAP scoring
    uses the analytic predictive N(mu_c, lam_c^-1 + P~^-1) of the query.
    """

    kind = HeadKind.GEMCL

    @property
    def encoder_out(self) -> int:
        return 2 * self.config.z_dim

    def init_params(self, rng):
        params = {
            "prior.mu": np.zeros(self.config.z_dim),
            "prior.log_lam": np.zeros(self.config.z_dim),
        }
        params.update(self.encoder.init_params(rng))
        return params

    def prior(self, params):
        return FactorizedGaussian(params["prior.mu"], ops.exp(params["prior.log_lam"]))

    def embed(self, params, x):
        out = self.encoder(params, x)
        d = self.config.z_dim
        return out[:, :d], ops.softplus(out[:, d:]) + PRECISION_FLOOR

    def classify_mode(self, mode):
        return ClassifyMode.MC if mode is PredictMode.MC else ClassifyMode.MAP


class PNHead(_BankHead):
    """
    Prototypical classification: unit-precision embeddings under an
    uninformative prior, so each class posterior mean is its prototype.
    """

    kind = HeadKind.PN

    def init_params(self, rng):
        return self.encoder.init_params(rng)

    def prior(self, params):
        d = self.config.z_dim
        return FactorizedGaussian(np.zeros(d), np.full(d, PN_PRIOR_PRECISION))

    def embed(self, params, x):
        embedding = self.encoder(params, x)
        return embedding, as_value(np.ones(embedding.shape))

    def classify_mode(self, mode):
        return ClassifyMode.PROTOTYPE

    def query_precision(self, precision):
        return None


class ALPaCAHead(SBMCLHead):
    """
    Bayesian linear regression on learned features.

    The readout W (feature_dim x 1) has a matrix-normal prior with learned
    cross term Q_0 and diagonal precision softplus(raw) + 1e-6; the noise
    variance is fixed by the config.
    """

    kind = HeadKind.ALPACA

    def __init__(self, config: MetaConfig):
        super().__init__(config)
        self.features = MLP("alpaca.features", [self.x_dim, *config.hidden_sizes, config.feature_dim],
                            activate_output=True)

    def init_params(self, rng):
        d = self.config.feature_dim
        params = self.features.init_params(rng)
        params["alpaca.q0"] = np.zeros((d, 1))
        params["alpaca.raw_lam0"] = np.full(d, UNIT_RAW)
        return params

    def prior(self, params) -> MatrixNormalState:
        d = self.config.feature_dim
        lam0 = ops.softplus(params["alpaca.raw_lam0"]) + PRECISION_FLOOR
        precision = ops.mul(np.eye(d), ops.reshape(lam0, (1, -1)))
        return MatrixNormalState(precision, params["alpaca.q0"], self.config.noise_var)

    def posterior(self, params, episode: Episode, sequential: bool = True) -> MatrixNormalState:
        self.check_episode(episode)
        state = self.prior(params)
        if len(episode.train_x) == 0:
            return state
        phi = self.features(params, episode.train_x)
        targets = np.asarray(episode.train_y, dtype=np.float64).reshape(len(episode.train_x), -1)
        if not sequential:
            return mn_batch_update(state, phi, targets)
        for t in range(len(targets)):
            state = mn_update(state, phi[t], targets[t])
        return state

    def loss(self, params, episode, rng) -> Value:
        """Negative analytic predictive log-likelihood of the test set."""
        state = self.posterior(params, episode, sequential=False)
        mean, variance = mn_predict(state, self.features(params, episode.test_x))
        var = ops.reshape(variance, (-1, 1))
        y = np.asarray(episode.test_y, dtype=np.float64).reshape(mean.shape)
        terms = ops.log(var) + ops.square(mean - y) / var + LOG_2PI
        return 0.5 * ops.sum_(terms)

    def predict(self, params, episode, mode=PredictMode.MC, rng=None, sequential=True) -> Prediction:
        state = self.posterior(params, episode, sequential)
        phi = self.features(params, episode.test_x)
        if mode is PredictMode.MAP:
            mean, variance = mn_predict(state, phi)
            return Prediction(mean=mean.numpy(), variance=variance.numpy().reshape(-1, 1))
        rng = rng if rng is not None else np.random.default_rng(0)
        outputs = np.stack([
            phi.data @ mn_sample_weights(state, rng.standard_normal(state.cross.shape))
            for _ in range(self.config.n_z)
        ])
        mean = outputs.mean(axis=0)
        spread = np.mean(np.square(outputs - mean), axis=0)
        return Prediction(mean=mean, variance=state.noise_var + spread)


HEADS = {
    HeadKind.GENERIC: GenericHead,
    HeadKind.GEMCL: GeMCLHead,
    HeadKind.PN: PNHead,
    HeadKind.ALPACA: ALPaCAHead,
}


def build_head(config: MetaConfig) -> SBMCLHead:
    """
    Head for `config.head` over `config.stream`'s domain.

    Raises:
        HeadMismatchException: If the head cannot serve the domain
    """
    head = HEADS[config.head](config)
    logger.debug("built %s head for %s", config.head.value, config.stream.domain.value)
    return head


@dataclass
class HeadOutput:
    """Prediction, meta-loss and evaluation metric of one episode."""
    prediction: Prediction
    loss: float
    metric: str
    score: float


def head_forward(head: SBMCLHead, params: Mapping[str, np.ndarray], episode: Episode,
                 mode: PredictMode = PredictMode.MAP, rng: Optional[np.random.Generator] = None,
                 sequential: bool = True) -> HeadOutput:
    """
    Run a head on one episode with fixed parameters.

    Raises:
        HeadMismatchException: If the episode's domain does not fit the head
    """
    head.check_episode(episode)
    values = as_constants(params)
    rng = rng if rng is not None else np.random.default_rng(0)
    prediction = head.predict(values, episode, mode, rng, sequential)
    loss = head.loss(values, episode, rng).item()
    return HeadOutput(prediction, loss, head.metric, head.score(prediction, episode))
