"""Minimal reverse-mode differentiable numerical kit."""

from .adam import AdamState, MissingGradError, adam_step
from .layers import (LstmParams, LstmState, activation, avgpool2, conv2d, dense,
                     dropout, embedding_lookup, flatten, log_softmax_pick, lstm_cell)
from .params import ParamStore, init_uniform, zeros
from .tensor import (ShapeError, Tensor, backward, constant, grad_enabled, no_grad)

__all__ = [
    "AdamState", "MissingGradError", "adam_step",
    "LstmParams", "LstmState", "activation", "avgpool2", "conv2d", "dense",
    "dropout", "embedding_lookup", "flatten", "log_softmax_pick", "lstm_cell",
    "ParamStore", "init_uniform", "zeros",
    "ShapeError", "Tensor", "backward", "constant", "grad_enabled", "no_grad",
]
