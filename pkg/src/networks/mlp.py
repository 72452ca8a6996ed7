"""
MLP - fully connected tanh network over autodiff Values
"""
import math
from typing import Dict, Mapping, Sequence

import numpy as np

from autodiff import Value, as_value
from autodiff import ops
from exceptions.sbmcl_exceptions import ShapeMismatchException


class MLP:
    """
    Stack of affine layers with tanh between them.

    Parameters are named `{prefix}.w{i}` and `{prefix}.b{i}`. The last layer is
    linear unless `activate_output` is set.
    """

    def __init__(self, prefix: str, sizes: Sequence[int], activate_output: bool = False):
        sizes = [int(s) for s in sizes]
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"{prefix}: an MLP needs an input and an output width, got {sizes}")
        self.prefix = prefix
        self.sizes = sizes
        self.activate_output = activate_output

    @property
    def in_dim(self) -> int:
        return self.sizes[0]

    @property
    def out_dim(self) -> int:
        return self.sizes[-1]

    def param_names(self):
        names = []
        for i in range(len(self.sizes) - 1):
            names += [f"{self.prefix}.w{i}", f"{self.prefix}.b{i}"]
        return names

    def init_params(self, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        """LeCun-normal weights, zero biases."""
        params = {}
        for i, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            params[f"{self.prefix}.w{i}"] = rng.standard_normal((fan_in, fan_out)) / math.sqrt(fan_in)
            params[f"{self.prefix}.b{i}"] = np.zeros(fan_out)
        return params

    def __call__(self, params: Mapping[str, Value], x) -> Value:
        h = as_value(x)
        if h.ndim != 2 or h.shape[1] != self.in_dim:
            raise ShapeMismatchException(self.prefix, [h.shape], f"expects (N, {self.in_dim}) input")
        last = len(self.sizes) - 2
        for i in range(last + 1):
            h = h @ params[f"{self.prefix}.w{i}"] + params[f"{self.prefix}.b{i}"]
            if i < last or self.activate_output:
                h = ops.tanh(h)
        return h
