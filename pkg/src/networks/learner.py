"""
Learner Network - emits a noisy observation of the episode latent per example

The learner never trains inside an episode. It only runs forward passes, and
the posterior over z is obtained by folding its outputs into a
FactorizedGaussian with the conjugate update rules.
"""
from enum import Enum
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from autodiff import Value, as_value
from autodiff import ops
from exceptions.sbmcl_exceptions import NonFiniteException, ShapeMismatchException
from interfaces.observation_learner import ObservationLearner
from posteriors import FactorizedGaussian, NoisyObservation, batch_update_stacked, seq_update

from .mlp import MLP

PRECISION_FLOOR = 1e-6


class TargetKind(Enum):
    """What the training stream carries besides the input."""
    REGRESSION = "regression"
    LABEL = "label"
    NONE = "none"


def encode_targets(y, kind: TargetKind, max_classes: int) -> np.ndarray:
    """One-hot labels over `max_classes`; raw (T, d_y) values for regression."""
    if kind is TargetKind.LABEL:
        y = np.asarray(y, dtype=np.int64).reshape(-1)
        if y.size and (y.min() < 0 or y.max() >= max_classes):
            raise ValueError(f"labels must lie in [0, {max_classes})")
        return np.eye(max_classes)[y]
    y = np.asarray(y, dtype=np.float64)
    return y.reshape(len(y), -1)


class LearnerNet(ObservationLearner):
    """
    MLP learner producing (z_hat, precision) for every training example.

    Supervised form: MLP_out(concat(MLP_x(x), MLP_y(enc(y)))).
    Unsupervised form: MLP(x).
    """

    def __init__(self, x_dim: int, z_dim: int, hidden_sizes: Sequence[int],
                 target_kind: TargetKind = TargetKind.NONE, y_dim: int = 1,
                 max_classes: int = 64, prefix: str = "learner"):
        self._z_dim = z_dim
        self.target_kind = target_kind
        self.max_classes = max_classes
        self.prefix = prefix
        width = hidden_sizes[0]
        if target_kind is TargetKind.NONE:
            self.x_net = MLP(f"{prefix}.net", [x_dim, *hidden_sizes, 2 * z_dim])
            self.y_net = None
            self.out_net = None
        else:
            enc_dim = max_classes if target_kind is TargetKind.LABEL else y_dim
            self.x_net = MLP(f"{prefix}.x", [x_dim, width], activate_output=True)
            self.y_net = MLP(f"{prefix}.y", [enc_dim, width], activate_output=True)
            self.out_net = MLP(f"{prefix}.out", [2 * width, *hidden_sizes[1:], 2 * z_dim])

    @property
    def z_dim(self) -> int:
        return self._z_dim

    @property
    def supervised(self) -> bool:
        return self.target_kind is not TargetKind.NONE

    def init_params(self, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        params = self.x_net.init_params(rng)
        if self.supervised:
            params.update(self.y_net.init_params(rng))
            params.update(self.out_net.init_params(rng))
        return params

    def observe(self, params: Mapping[str, Value], x, y=None) -> Tuple[Value, Value]:
        x = as_value(x)
        if not np.all(np.isfinite(x.data)):
            raise NonFiniteException("learner input contains non-finite entries")
        if self.supervised:
            if y is None:
                raise ShapeMismatchException("learner", [x.shape], "supervised learner needs targets")
            y_enc = encode_targets(y, self.target_kind, self.max_classes)
            if len(y_enc) != x.shape[0]:
                raise ShapeMismatchException("learner", [x.shape, y_enc.shape])
            h = ops.concat([self.x_net(params, x), self.y_net(params, y_enc)], axis=1)
            out = self.out_net(params, h)
        else:
            out = self.x_net(params, x)

        if not np.all(np.isfinite(out.data)):
            raise NonFiniteException("learner output contains non-finite entries")
        d = self._z_dim
        z_hat = out[:, :d]
        precision = ops.softplus(out[:, d:]) + PRECISION_FLOOR
        return z_hat, precision


def learn_stream(learner: ObservationLearner, params: Mapping[str, Value],
                 prior: FactorizedGaussian, x, y=None,
                 sequential: bool = True) -> FactorizedGaussian:
    """
    Posterior over z after the training stream (x, y).

    Args:
        sequential: fold observations one at a time (evaluation path) or apply
            the order-free batch rule (meta-training path)

    Returns:
        FactorizedGaussian: the prior itself when the stream is empty
    """
    x = np.asarray(x, dtype=np.float64)
    if len(x) == 0:
        return prior
    z_hat, precision = learner.observe(params, x, y)
    if not sequential:
        return batch_update_stacked(prior, z_hat, precision)
    state = prior
    for t in range(len(x)):
        state = seq_update(state, NoisyObservation(z_hat[t], precision[t]))
    return state

