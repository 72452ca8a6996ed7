"""Reverse-mode automatic differentiation over dense float64 arrays"""

from .value import Value, Tape, as_value, backward
from .ops import forward_op, OPS
from .optim import AdamState, adam_step, sgd_step
