"""Adam optimizer over a ParamStore."""

from __future__ import annotations

import numpy as np

from .params import ParamStore


class MissingGradError(RuntimeError):
    pass


class AdamState:
    """First/second moments per parameter plus a shared step counter."""

    def __init__(self, store: ParamStore, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(t.data) for k, t in store.items()}
        self.v = {k: np.zeros_like(t.data) for k, t in store.items()}


def adam_step(store: ParamStore, state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update; frozen parameters are skipped."""
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for name, p in store.items():
        if store.is_frozen(name):
            continue
        if p.grad is None:
            raise MissingGradError(f"parameter {name!r} has no gradient")
        g = p.grad
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
