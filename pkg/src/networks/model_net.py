"""
Model Network - likelihoods conditioned on the input and the episode latent z

Supervised models encode x, append z to the encoding and decode the parameters
of p(y | x, z). The unsupervised model decodes z alone (the layer biases are the
input-free pathway) into a Gaussian mixture over x.
"""
import math
from enum import Enum
from typing import Dict, Mapping, Sequence

import numpy as np

from autodiff import Value, as_value
from autodiff import ops
from exceptions.sbmcl_exceptions import ShapeMismatchException
from posteriors.factorized_gaussian import LOG_2PI

from .mlp import MLP

VARIANCE_FLOOR = 1e-6
# softplus(UNIT_RAW) == 1
UNIT_RAW = math.log(math.e - 1.0)


class Likelihood(Enum):
    """Output distribution family."""
    GAUSSIAN = "gaussian"
    CATEGORICAL = "categorical"
    MIXTURE = "mixture"


def tile_rows(z: Value, n: int) -> Value:
    """Repeat a (D,) latent as n rows, keeping it differentiable."""
    return ops.matmul(np.ones((n, 1)), ops.reshape(z, (1, -1)))


class ModelNet:
    """
    p(y | x, z) for GAUSSIAN and CATEGORICAL, p(x | z) for MIXTURE.

    Args:
        out_dim: target dimension (GAUSSIAN), number of logits (CATEGORICAL)
            or ignored (MIXTURE)
        components: mixture components (MIXTURE only)
    """

    def __init__(self, likelihood: Likelihood, x_dim: int, z_dim: int,
                 hidden_sizes: Sequence[int], out_dim: int = 1,
                 components: int = 16, prefix: str = "model"):
        self.likelihood = likelihood
        self.x_dim = x_dim
        self.z_dim = z_dim
        self.out_dim = out_dim
        self.components = components
        self.prefix = prefix
        width = hidden_sizes[0]
        if likelihood is Likelihood.MIXTURE:
            self.encoder = None
            self.decoder = MLP(f"{prefix}.decoder",
                               [z_dim, *hidden_sizes, components * (x_dim + 1)])
        else:
            self.encoder = MLP(f"{prefix}.encoder", [x_dim, width], activate_output=True)
            self.decoder = MLP(f"{prefix}.decoder", [width + z_dim, *hidden_sizes[1:], out_dim])

    @property
    def supervised(self) -> bool:
        return self.likelihood is not Likelihood.MIXTURE

    def init_params(self, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        params = {}
        if self.encoder is not None:
            params.update(self.encoder.init_params(rng))
        params.update(self.decoder.init_params(rng))
        if self.likelihood is Likelihood.GAUSSIAN:
            params[f"{self.prefix}.raw_noise"] = np.full(self.out_dim, UNIT_RAW)
        elif self.likelihood is Likelihood.MIXTURE:
            params[f"{self.prefix}.raw_var"] = np.array(UNIT_RAW)
        return params

    def encode(self, params: Mapping[str, Value], x) -> Value:
        """Input encoding shared by every z draw."""
        return self.encoder(params, x)

    def decode(self, params: Mapping[str, Value], h: Value, z) -> Value:
        """Mean (GAUSSIAN) or logits (CATEGORICAL) for each encoded row."""
        z = as_value(z)
        if z.shape != (self.z_dim,):
            raise ShapeMismatchException(self.prefix, [z.shape], f"expects z of shape ({self.z_dim},)")
        return self.decoder(params, ops.concat([h, tile_rows(z, h.shape[0])], axis=1))

    def noise_variance(self, params: Mapping[str, Value]) -> Value:
        return ops.softplus(params[f"{self.prefix}.raw_noise"]) + VARIANCE_FLOOR

    def mixture(self, params: Mapping[str, Value], z):
        """
        Mixture parameters for one z.

        Returns:
            means (M, x_dim), log mixing weights (M,), shared variance ()
        """
        z = as_value(z)
        if z.shape != (self.z_dim,):
            raise ShapeMismatchException(self.prefix, [z.shape], f"expects z of shape ({self.z_dim},)")
        m, d = self.components, self.x_dim
        out = self.decoder(params, ops.reshape(z, (1, -1)))
        means = ops.reshape(out[:, :m * d], (m, d))
        logits = ops.reshape(out[:, m * d:], (m,))
        log_weights = logits - ops.logsumexp(logits, axis=0)
        var = ops.softplus(params[f"{self.prefix}.raw_var"]) + VARIANCE_FLOOR
        return means, log_weights, var

    def log_likelihood(self, params: Mapping[str, Value], x, y, z, h: Value = None) -> Value:
        """
        Per-example log-likelihood, shape (N,).

        `y` is ignored by the unsupervised model; `h` reuses a precomputed encoding.
        """
        x = as_value(x)
        if self.likelihood is Likelihood.MIXTURE:
            return self._mixture_log_density(params, x, z)
        if h is None:
            h = self.encode(params, x)
        out = self.decode(params, h, z)
        if self.likelihood is Likelihood.GAUSSIAN:
            y = np.asarray(y, dtype=np.float64).reshape(out.shape)
            var = self.noise_variance(params)
            terms = ops.square(out - y) / var + ops.log(var) + LOG_2PI
            return -0.5 * ops.sum_(terms, axis=1)
        labels = np.asarray(y, dtype=np.int64).reshape(-1)
        picked = out[np.arange(len(labels)), labels]
        return picked - ops.logsumexp(out, axis=1)

    def _mixture_log_density(self, params, x: Value, z) -> Value:
        means, log_weights, var = self.mixture(params, z)
        # squared distances (N, M) without materializing (N, M, D)
        x_sq = ops.sum_(ops.square(x), axis=1, keepdims=True)
        m_sq = ops.reshape(ops.sum_(ops.square(means), axis=1), (1, -1))
        d2 = (-2.0 * (x @ ops.transpose(means)) + m_sq) + x_sq
        log_norm = -0.5 * self.x_dim * (ops.log(var) + LOG_2PI)
        components = (log_weights + d2 * (-0.5 / var)) + log_norm
        return ops.logsumexp(components, axis=1)
