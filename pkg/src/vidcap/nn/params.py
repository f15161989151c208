"""Named parameter store with freeze flags, plus parameter initialization."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def init_uniform(shape, rng: np.random.Generator, low: float = -0.1,
                 high: float = 0.1) -> Tensor:
    """i.i.d. uniform init in [low, high]; deterministic per generator state."""
    return Tensor(rng.uniform(low, high, size=shape), requires_grad=True)


def zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


class ParamStore:
    """name -> parameter Tensor. A frozen parameter still receives gradients
    but the optimizer never updates it."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._frozen: set[str] = set()

    def add(self, name: str, t: Tensor) -> Tensor:
        if name in self._params:
            raise KeyError(f"duplicate parameter {name!r}")
        t.requires_grad = True
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def set_frozen(self, name: str, frozen: bool) -> None:
        if name not in self._params:
            raise KeyError(name)
        if frozen:
            self._frozen.add(name)
        else:
            self._frozen.discard(name)

    def freeze_prefix(self, prefix: str, frozen: bool = True) -> None:
        for name in self._params:
            if name.startswith(prefix):
                self.set_frozen(name, frozen)

    def is_frozen(self, name: str) -> bool:
        return name in self._frozen

    def frozen_names(self) -> set[str]:
        return set(self._frozen)

    def zero_grads(self) -> None:
        for t in self._params.values():
            t.grad = None

    def copy_values(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self._params.items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        for k, v in values.items():
            if k not in self._params:
                raise KeyError(f"unknown parameter {k!r}")
            if self._params[k].data.shape != v.shape:
                raise ValueError(f"shape mismatch for {k!r}: "
                                 f"{self._params[k].data.shape} vs {v.shape}")
            self._params[k].data = np.asarray(v, dtype=np.float64).copy()
