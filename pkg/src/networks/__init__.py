"""Learner and model networks, episode objectives and the SB-MCL heads"""

from .mlp import MLP
from .learner import LearnerNet, TargetKind, encode_targets, learn_stream
from .model_net import Likelihood, ModelNet
from .objectives import (
    Prediction,
    elbo_supervised,
    elbo_unsupervised,
    predict,
    mse,
    error_rate,
    nll,
    METRICS,
)
from .heads import (
    SBMCLHead,
    GenericHead,
    GeMCLHead,
    PNHead,
    ALPaCAHead,
    HeadOutput,
    build_head,
    head_forward,
    as_constants,
)
