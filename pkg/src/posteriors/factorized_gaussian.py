"""
Factorized Gaussian - diagonal-precision Gaussian posterior and its conjugate updates

The posterior over the episode latent z is N(mu, diag(lam)^-1). Each training
example contributes a noisy observation (z_hat, precision) of z; folding the
observations in one at a time and summing them in one batch give the same
posterior because the sufficient statistics are plain sums.
"""
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from autodiff import Value, as_value
from autodiff import ops
from exceptions.sbmcl_exceptions import (
    InvalidPosteriorException,
    NonFiniteException,
    ShapeMismatchException,
)

LOG_2PI = math.log(2.0 * math.pi)


def _check_vector(name: str, v: Value) -> None:
    if v.ndim != 1:
        raise ShapeMismatchException(name, [v.shape], "expects a vector")
    if not np.all(np.isfinite(v.data)):
        raise NonFiniteException(f"{name} contains non-finite entries")


@dataclass(frozen=True)
class FactorizedGaussian:
    """
    Gaussian with mean `mu` and diagonal precision `lam`, both D-vectors.

    Fields hold autodiff Values so updates stay differentiable; plain arrays are
    wrapped as constants.
    """
    mu: Value
    lam: Value

    def __post_init__(self):
        object.__setattr__(self, "mu", as_value(self.mu))
        object.__setattr__(self, "lam", as_value(self.lam))
        _check_vector("mu", self.mu)
        _check_vector("lam", self.lam)
        if self.mu.shape != self.lam.shape:
            raise ShapeMismatchException("FactorizedGaussian", [self.mu.shape, self.lam.shape])
        if np.any(self.lam.data <= 0):
            raise InvalidPosteriorException("precision entries must be positive")

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    @classmethod
    def unit(cls, dim: int) -> "FactorizedGaussian":
        """The standard normal N(0, I)."""
        return cls(np.zeros(dim), np.ones(dim))

    @classmethod
    def from_arrays(cls, mu, lam) -> "FactorizedGaussian":
        return cls(np.asarray(mu, dtype=np.float64), np.asarray(lam, dtype=np.float64))

    def numpy(self):
        """Return (mu, lam) as numpy copies."""
        return self.mu.numpy(), self.lam.numpy()


@dataclass(frozen=True)
class NoisyObservation:
    """
    Learner output for one example: z_hat observed with diagonal precision.
    """
    z_hat: Value
    precision: Value

    def __post_init__(self):
        object.__setattr__(self, "z_hat", as_value(self.z_hat))
        object.__setattr__(self, "precision", as_value(self.precision))
        _check_vector("z_hat", self.z_hat)
        _check_vector("precision", self.precision)
        if self.z_hat.shape != self.precision.shape:
            raise ShapeMismatchException("NoisyObservation", [self.z_hat.shape, self.precision.shape])
        if np.any(self.precision.data < 0):
            raise InvalidPosteriorException("observation precision must be non-negative")

    @property
    def dim(self) -> int:
        return self.z_hat.shape[0]


def seq_update(state: FactorizedGaussian, obs: NoisyObservation) -> FactorizedGaussian:
    """
    Fold one observation into the posterior.

    lam_t = lam_{t-1} + P_t
    mu_t  = (lam_{t-1} mu_{t-1} + P_t z_hat_t) / lam_t

    Raises:
        ShapeMismatchException: If the dimensions differ
    """
    if state.dim != obs.dim:
        raise ShapeMismatchException("seq_update", [state.mu.shape, obs.z_hat.shape])
    lam = state.lam + obs.precision
    mu = (state.lam * state.mu + obs.precision * obs.z_hat) / lam
    return FactorizedGaussian(mu, lam)


def batch_update(prior: FactorizedGaussian,
                 observations: Sequence[NoisyObservation]) -> FactorizedGaussian:
    """
    Combine all observations with the prior in closed form.

    The prior enters as the t=0 term (z_hat_0 = mu_0, P_0 = lam_0). Sums are
    correctly rounded, so any ordering of `observations` gives the same bits.
    """
    if not observations:
        return prior
    for obs in observations:
        if obs.dim != prior.dim:
            raise ShapeMismatchException("batch_update", [prior.mu.shape, obs.z_hat.shape])
    z_hat = ops.concat([ops.reshape(o.z_hat, (1, -1)) for o in observations], axis=0)
    precision = ops.concat([ops.reshape(o.precision, (1, -1)) for o in observations], axis=0)
    return batch_update_stacked(prior, z_hat, precision)


def batch_update_stacked(prior: FactorizedGaussian, z_hat, precision) -> FactorizedGaussian:
    """
    Batch rule for observations stacked as (T, D) arrays or Values.
    """
    z_hat, precision = as_value(z_hat), as_value(precision)
    if z_hat.ndim != 2 or z_hat.shape != precision.shape or z_hat.shape[1] != prior.dim:
        raise ShapeMismatchException("batch_update", [prior.mu.shape, z_hat.shape, precision.shape])
    if z_hat.shape[0] == 0:
        return prior
    if not (np.all(np.isfinite(z_hat.data)) and np.all(np.isfinite(precision.data))):
        raise NonFiniteException("observations contain non-finite entries")
    if np.any(precision.data < 0):
        raise InvalidPosteriorException("observation precision must be non-negative")

    P = ops.concat([ops.reshape(prior.lam, (1, -1)), precision], axis=0)
    Z = ops.concat([ops.reshape(prior.mu, (1, -1)), z_hat], axis=0)
    lam = ops.sum_(P, axis=0, exact=True)
    mu = ops.sum_(P * Z, axis=0, exact=True) / lam
    return FactorizedGaussian(mu, lam)


def kl_to(q: FactorizedGaussian, p: FactorizedGaussian) -> Value:
    """
    KL(q || p) for diagonal Gaussians, summed over dimensions.

    0.5 * sum(lam_p / lam_q + lam_p (mu_q - mu_p)^2 - 1 + log(lam_q / lam_p))
    """
    if q.dim != p.dim:
        raise ShapeMismatchException("kl_to", [q.mu.shape, p.mu.shape])
    terms = (p.lam / q.lam + p.lam * ops.square(q.mu - p.mu) - 1.0
             + ops.log(q.lam / p.lam))
    return 0.5 * ops.sum_(terms)


def reparam_sample(state: FactorizedGaussian, eps) -> Value:
    """
    z = mu + lam^{-1/2} * eps.

    `eps` is a standard-normal draw of shape (D,) or (n, D); no gradient
    flows into it.
    """
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape[-1:] != (state.dim,) or eps.ndim > 2:
        raise ShapeMismatchException("reparam_sample", [state.mu.shape, eps.shape])
    return state.mu + eps * ops.reciprocal(ops.sqrt(state.lam))


def map_point(state: FactorizedGaussian) -> Value:
    """Posterior mode, which for a Gaussian is its mean."""
    return state.mu


def log_predictive(state: FactorizedGaussian, point, extra_precision=None) -> Value:
    """
    Log-density of `point` under N(mu, lam^-1 + extra_precision^-1).

    `point` is (D,) or (N, D); the result is a scalar or an (N,) vector. With
    `extra_precision` omitted the point is taken as exact.
    """
    point = as_value(point)
    if point.shape[-1:] != (state.dim,):
        raise ShapeMismatchException("log_predictive", [state.mu.shape, point.shape])
    var = ops.reciprocal(state.lam)
    if extra_precision is not None:
        var = var + ops.reciprocal(as_value(extra_precision))
    diff2 = ops.square(point - state.mu)
    terms = ops.log(var) + diff2 / var + LOG_2PI
    return -0.5 * ops.sum_(terms, axis=-1)
