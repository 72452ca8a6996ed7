"""
Classwise Gaussian Bank - one factorized Gaussian per label category

Categories seen for the first time start from the shared prior. Together the
per-category posteriors form a Gaussian mixture over the embedding space, and
a query is assigned to the most likely component.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Hashable, List, Optional, Tuple

import numpy as np

from autodiff import Value, as_value
from autodiff import ops
from exceptions.sbmcl_exceptions import EmptyBankException, ShapeMismatchException

from .factorized_gaussian import (
    LOG_2PI,
    FactorizedGaussian,
    NoisyObservation,
    batch_update_stacked,
    log_predictive,
    reparam_sample,
    seq_update,
)


class ClassifyMode(Enum):
    """How a query embedding is scored against each category."""
    MC = "mc"
    MAP = "map"
    PROTOTYPE = "prototype"


@dataclass(frozen=True)
class ClasswiseGaussianBank:
    """
    Map label -> FactorizedGaussian in a shared embedding space.
    """
    prior: FactorizedGaussian
    posteriors: Dict[Hashable, FactorizedGaussian] = field(default_factory=dict)

    def __post_init__(self):
        for label, post in self.posteriors.items():
            if post.dim != self.prior.dim:
                raise ShapeMismatchException(f"bank[{label!r}]", [self.prior.mu.shape, post.mu.shape])

    @property
    def dim(self) -> int:
        return self.prior.dim

    @property
    def labels(self) -> List[Hashable]:
        return list(self.posteriors)

    def __len__(self) -> int:
        return len(self.posteriors)

    def get(self, label: Hashable) -> FactorizedGaussian:
        """Posterior for `label`, or the prior if the label is unseen."""
        return self.posteriors.get(label, self.prior)


def bank_update(bank: ClasswiseGaussianBank, label: Hashable,
                obs: NoisyObservation) -> ClasswiseGaussianBank:
    """Return a bank where only `label`'s posterior has absorbed `obs`."""
    if obs.dim != bank.dim:
        raise ShapeMismatchException("bank_update", [bank.prior.mu.shape, obs.z_hat.shape])
    posteriors = dict(bank.posteriors)
    posteriors[label] = seq_update(bank.get(label), obs)
    return ClasswiseGaussianBank(bank.prior, posteriors)


def bank_batch_update(bank: ClasswiseGaussianBank, labels, z_hat, precision) -> ClasswiseGaussianBank:
    """
    Batch rule per category for stacked (T, D) observations with (T,) labels.

    Categories are added in order of first appearance.
    """
    z_hat, precision = as_value(z_hat), as_value(precision)
    labels = list(labels)
    if z_hat.ndim != 2 or z_hat.shape[1] != bank.dim or z_hat.shape[0] != len(labels):
        raise ShapeMismatchException("bank_batch_update", [bank.prior.mu.shape, z_hat.shape])
    posteriors = dict(bank.posteriors)
    order = list(dict.fromkeys(labels))
    for label in order:
        rows = np.array([i for i, lab in enumerate(labels) if lab == label])
        posteriors[label] = batch_update_stacked(bank.get(label), z_hat[rows], precision[rows])
    return ClasswiseGaussianBank(bank.prior, posteriors)


def _log_gaussian(point: Value, mean: Value, precision: Value) -> Value:
    # diagonal Gaussian log-density summed over the last axis
    terms = LOG_2PI - ops.log(precision) + ops.square(point - mean) * precision
    return -0.5 * ops.sum_(terms, axis=-1)


def bank_classify(bank: ClasswiseGaussianBank, embedding, mode: ClassifyMode = ClassifyMode.MAP,
                  query_precision=None, n_z: int = 5, rng: Optional[np.random.Generator] = None,
                  eps: Optional[np.ndarray] = None) -> Tuple[List[Hashable], Value]:
    """
    Score embeddings against every category.

    Args:
        bank: non-empty bank
        embedding: (D,) or (N, D) query embeddings
        mode: MAP scores by the analytic posterior-predictive log-density,
            PROTOTYPE by negative squared distance to the posterior mean, MC by
            the log of the density averaged over `n_z` sampled category means
        query_precision: precision of the query embedding; omitted means an
            exact point (MC then uses unit precision)
        eps: optional (C, n_z, D) standard-normal draws for MC mode

    Returns:
        Tuple[List, Value]: labels in column order and scores (C,) or (N, C)

    Raises:
        EmptyBankException: If the bank holds no category
    """
    if len(bank) == 0:
        raise EmptyBankException("cannot classify against an empty bank")
    embedding = as_value(embedding)
    single = embedding.ndim == 1
    if single:
        embedding = ops.reshape(embedding, (1, -1))
    if embedding.ndim != 2 or embedding.shape[1] != bank.dim:
        raise ShapeMismatchException("bank_classify", [bank.prior.mu.shape, embedding.shape])

    labels = bank.labels
    if mode is ClassifyMode.MC and eps is None:
        rng = rng or np.random.default_rng(0)
        eps = rng.standard_normal((len(labels), n_z, bank.dim))

    columns = []
    for c, label in enumerate(labels):
        post = bank.posteriors[label]
        if mode is ClassifyMode.MAP:
            score = log_predictive(post, embedding, query_precision)
        elif mode is ClassifyMode.PROTOTYPE:
            score = -ops.sum_(ops.square(embedding - post.mu), axis=1)
        else:
            score = _mc_score(post, embedding, query_precision, eps[c])
        columns.append(ops.reshape(score, (-1, 1)))

    scores = ops.concat(columns, axis=1)
    if single:
        scores = ops.reshape(scores, (-1,))
    return labels, scores


def _mc_score(post: FactorizedGaussian, embedding: Value, query_precision, eps: np.ndarray) -> Value:
    """
    log mean over draws of N(embedding; sample, 1/query_precision).

    A missing query precision means unit precision in every dimension.
    """
    samples = reparam_sample(post, eps)
    n_z = eps.shape[0]
    precision = as_value(np.ones(post.dim) if query_precision is None else query_precision)
    per_sample = []
    for s in range(n_z):
        per_sample.append(ops.reshape(_log_gaussian(embedding, samples[s], precision), (-1, 1)))
    stacked = ops.concat(per_sample, axis=1)
    return ops.logsumexp(stacked, axis=1) - float(np.log(n_z))
