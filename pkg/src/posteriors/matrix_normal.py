"""
Matrix Normal State - conjugate Bayesian linear regression over a weight matrix

Tracks the feature precision and the accumulated feature-target products of a
linear model y = W^T phi + noise with fixed isotropic noise variance. The
posterior mean of W is precision^-1 cross.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg

from autodiff import Value, as_value
from autodiff import ops
from exceptions.sbmcl_exceptions import (
    InvalidPosteriorException,
    NonFiniteException,
    ShapeMismatchException,
)


@dataclass(frozen=True)
class MatrixNormalState:
    """
    Posterior over a (d_phi x d_y) weight matrix.

    precision: (d_phi, d_phi) symmetric positive definite
    cross: (d_phi, d_y)
    noise_var: observation noise variance, a fixed hyperparameter
    """
    precision: Value
    cross: Value
    noise_var: float

    def __post_init__(self):
        object.__setattr__(self, "precision", as_value(self.precision))
        object.__setattr__(self, "cross", as_value(self.cross))
        P, Q = self.precision.data, self.cross.data
        if P.ndim != 2 or P.shape[0] != P.shape[1] or Q.ndim != 2 or Q.shape[0] != P.shape[0]:
            raise ShapeMismatchException("MatrixNormalState", [P.shape, Q.shape])
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(Q))):
            raise NonFiniteException("matrix normal state contains non-finite entries")
        if not np.allclose(P, P.T, rtol=1e-10, atol=1e-12):
            raise InvalidPosteriorException("precision must be symmetric")
        if not self.noise_var > 0:
            raise ValueError("noise_var must be positive")

    @property
    def feature_dim(self) -> int:
        return self.precision.shape[0]

    @property
    def target_dim(self) -> int:
        return self.cross.shape[1]

    @classmethod
    def from_prior(cls, prior_precision, prior_cross, noise_var: float) -> "MatrixNormalState":
        return cls(as_value(prior_precision), as_value(prior_cross), float(noise_var))


def mn_update(state: MatrixNormalState, phi, y) -> MatrixNormalState:
    """
    Fold one (phi, y) pair into the posterior.

    precision += phi phi^T / noise_var
    cross     += phi y^T / noise_var
    """
    phi, y = as_value(phi), as_value(y)
    if phi.shape != (state.feature_dim,) or y.shape != (state.target_dim,):
        raise ShapeMismatchException("mn_update", [state.cross.shape, phi.shape, y.shape])
    col = ops.reshape(phi, (-1, 1))
    precision = state.precision + (col @ ops.reshape(phi, (1, -1))) / state.noise_var
    cross = state.cross + (col @ ops.reshape(y, (1, -1))) / state.noise_var
    return MatrixNormalState(precision, cross, state.noise_var)


def mn_batch_update(state: MatrixNormalState, features, targets) -> MatrixNormalState:
    """
    Fold a (T, d_phi) feature matrix and (T, d_y) targets in at once.
    """
    features, targets = as_value(features), as_value(targets)
    if (features.ndim != 2 or targets.ndim != 2 or features.shape[0] != targets.shape[0]
            or features.shape[1] != state.feature_dim or targets.shape[1] != state.target_dim):
        raise ShapeMismatchException("mn_batch_update",
                                     [state.cross.shape, features.shape, targets.shape])
    if features.shape[0] == 0:
        return state
    ft = ops.transpose(features)
    precision = state.precision + (ft @ features) / state.noise_var
    cross = state.cross + (ft @ targets) / state.noise_var
    return MatrixNormalState(precision, cross, state.noise_var)


def _check_positive_definite(state: MatrixNormalState) -> None:
    try:
        linalg.cho_factor(state.precision.data)
    except linalg.LinAlgError as e:
        raise InvalidPosteriorException("precision is not positive definite") from e


def mn_posterior_mean(state: MatrixNormalState) -> Value:
    """Posterior mean weight matrix precision^-1 cross, shape (d_phi, d_y)."""
    _check_positive_definite(state)
    return ops.solve(state.precision, state.cross)


def mn_predict(state: MatrixNormalState, phi) -> Tuple[Value, Value]:
    """
    Posterior predictive at feature vector(s) `phi`.

    Returns:
        Tuple[Value, Value]: mean (d_y,) or (N, d_y), and variance (scalar or (N,))
        noise_var * (1 + phi^T precision^-1 phi)

    Raises:
        InvalidPosteriorException: If the precision is not positive definite
    """
    phi = as_value(phi)
    single = phi.ndim == 1
    if single:
        phi = ops.reshape(phi, (1, -1))
    if phi.ndim != 2 or phi.shape[1] != state.feature_dim:
        raise ShapeMismatchException("mn_predict", [state.precision.shape, phi.shape])

    weights = mn_posterior_mean(state)
    mean = phi @ weights
    spread = ops.solve(state.precision, ops.transpose(phi))
    quad = ops.sum_(phi * ops.transpose(spread), axis=1)
    variance = state.noise_var * (1.0 + quad)
    if single:
        return ops.reshape(mean, (-1,)), ops.reshape(variance, ())
    return mean, variance


def mn_sample_weights(state: MatrixNormalState, eps: np.ndarray) -> np.ndarray:
    """
    Draw a weight matrix with columns ~ N(mean, noise_var * precision^-1).

    `eps` is a standard-normal (d_phi, d_y) draw. Used only for prediction, so
    the result is a plain array.
    """
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != state.cross.shape:
        raise ShapeMismatchException("mn_sample_weights", [state.cross.shape, eps.shape])
    _check_positive_definite(state)
    L = linalg.cholesky(state.precision.data, lower=True)
    mean = linalg.cho_solve((L, True), state.cross.data)
    return mean + np.sqrt(state.noise_var) * linalg.solve_triangular(L.T, eps, lower=False)
