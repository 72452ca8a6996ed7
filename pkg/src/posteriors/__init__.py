"""Exponential-family posterior states and their Bayesian update rules"""

from .factorized_gaussian import (
    FactorizedGaussian,
    NoisyObservation,
    seq_update,
    batch_update,
    batch_update_stacked,
    kl_to,
    reparam_sample,
    map_point,
    log_predictive,
)
from .matrix_normal import (
    MatrixNormalState,
    mn_update,
    mn_batch_update,
    mn_posterior_mean,
    mn_predict,
    mn_sample_weights,
)
from .gaussian_bank import (
    ClassifyMode,
    ClasswiseGaussianBank,
    bank_update,
    bank_batch_update,
    bank_classify,
)
