"""
Optimizers - functional first-order parameter updates
"""
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from exceptions.sbmcl_exceptions import ShapeMismatchException

Params = Dict[str, np.ndarray]


@dataclass
class AdamState:
    """
    First and second moment estimates plus the step counter.
    """
    step: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params: Mapping[str, np.ndarray]) -> "AdamState":
        return cls(
            step=0,
            m={name: np.zeros_like(p) for name, p in params.items()},
            v={name: np.zeros_like(p) for name, p in params.items()},
        )


def adam_step(params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray],
              state: AdamState, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> Tuple[Params, AdamState]:
    """
    One bias-corrected Adam update.

    Args:
        params: parameter arrays by name
        grads: gradient arrays by name (missing names count as zero)
        state: moments from the previous step (use AdamState.zeros_like first)

    Returns:
        Tuple[Params, AdamState]: new parameters and new state; inputs are not modified

    Raises:
        ShapeMismatchException: If a gradient or moment does not match its parameter
    """
    step = state.step + 1
    new_params, new_m, new_v = {}, {}, {}
    for name, p in params.items():
        g = grads.get(name)
        g = np.zeros_like(p) if g is None else np.asarray(g, dtype=np.float64)
        m_prev = state.m.get(name, np.zeros_like(p))
        v_prev = state.v.get(name, np.zeros_like(p))
        for other in (g, m_prev, v_prev):
            if other.shape != p.shape:
                raise ShapeMismatchException("adam_step", [p.shape, other.shape], name)

        m = beta1 * m_prev + (1.0 - beta1) * g
        v = beta2 * v_prev + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** step)
        v_hat = v / (1.0 - beta2 ** step)
        new_params[name] = p - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_m[name] = m
        new_v[name] = v
    return new_params, AdamState(step=step, m=new_m, v=new_v)


def sgd_step(params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray],
             lr: float) -> Params:
    """Plain gradient descent step; returns new arrays."""
    out = {}
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            out[name] = p.copy()
            continue
        if np.shape(g) != p.shape:
            raise ShapeMismatchException("sgd_step", [p.shape, np.shape(g)], name)
        out[name] = p - lr * g
    return out
