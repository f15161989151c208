"""Checkpoint container and bit-exact on-disk format.

A checkpoint is self-contained: model hyperparameters, every parameter
array, the full optimizer state, the training-stage tag, and the vocabulary
and attribute lexicon the model was trained against.  Serialization keeps
float64 bits intact (raw little-endian payload behind a JSON header), so a
save/load round trip changes nothing about downstream evaluation.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from ..attributes import AttributeLexicon
from ..data.textproc import Vocabulary
from ..model import Captioner, CaptionerConfig
from ..nn.adam import AdamState

_MAGIC = b"VCKP"
_VERSION = 1

# Array groups serialized behind the header, in this order.
_FIELDS = ("values", "adam_m", "adam_v")


@dataclass
class Checkpoint:
    stage: int
    iteration: int
    best_val_cider: float
    model_config: Dict
    vocab_words: List[str]
    values: Dict[str, np.ndarray]
    adam_m: Dict[str, np.ndarray]
    adam_v: Dict[str, np.ndarray]
    adam_step_count: int
    adam_betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    attribute_tokens: Optional[List[str]] = field(default=None)

    def vocabulary(self) -> Vocabulary:
        return Vocabulary(self.vocab_words)

    def lexicon(self) -> Optional[AttributeLexicon]:
        if self.attribute_tokens is None:
            return None
        return AttributeLexicon(list(self.attribute_tokens))


def snapshot(model: Captioner, adam: AdamState, *, stage: int, iteration: int,
             best_val_cider: float, vocab: Vocabulary,
             lexicon: Optional[AttributeLexicon] = None) -> Checkpoint:
    """Deep-copy the live training state into a Checkpoint."""
    return Checkpoint(
        stage=stage,
        iteration=iteration,
        best_val_cider=float(best_val_cider),
        model_config=model.config.as_dict(),
        vocab_words=list(vocab.words),
        values=model.params.copy_values(),
        adam_m={k: v.copy() for k, v in adam.m.items()},
        adam_v={k: v.copy() for k, v in adam.v.items()},
        adam_step_count=adam.step_count,
        adam_betas=(adam.beta1, adam.beta2),
        adam_eps=adam.eps,
        attribute_tokens=None if lexicon is None else list(lexicon.tokens),
    )


def model_from_checkpoint(ck: Checkpoint) -> Captioner:
    """Rebuild the captioner exactly as checkpointed."""
    config = CaptionerConfig.from_dict(ck.model_config)
    model = Captioner(config, seed=0)
    model.params.load_values(ck.values)
    missing = set(model.params.names()) - set(ck.values)
    if missing:
        raise ValueError(f"checkpoint is missing parameters: {sorted(missing)}")
    return model


def adam_from_checkpoint(ck: Checkpoint, model: Captioner) -> AdamState:
    """Optimizer state aligned with the rebuilt model's parameters."""
    state = AdamState(model.params, beta1=ck.adam_betas[0],
                      beta2=ck.adam_betas[1], eps=ck.adam_eps)
    state.step_count = ck.adam_step_count
    for name in state.m:
        if name not in ck.adam_m:
            raise ValueError(f"checkpoint is missing optimizer state for {name!r}")
        state.m[name] = ck.adam_m[name].copy()
        state.v[name] = ck.adam_v[name].copy()
    return state


def save_checkpoint(ck: Checkpoint, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    groups = {"values": ck.values, "adam_m": ck.adam_m, "adam_v": ck.adam_v}
    arrays = []
    payload = []
    for group in _FIELDS:
        for name in sorted(groups[group]):
            arr = np.ascontiguousarray(groups[group][name], dtype="<f8")
            arrays.append([group, name, list(arr.shape)])
            payload.append(arr.tobytes())
    header = {
        "adam_betas": list(ck.adam_betas),
        "adam_eps": ck.adam_eps,
        "adam_step_count": ck.adam_step_count,
        "arrays": arrays,
        "attribute_tokens": ck.attribute_tokens,
        "best_val_cider": ck.best_val_cider,
        "iteration": ck.iteration,
        "model_config": ck.model_config,
        "stage": ck.stage,
        "vocab_words": ck.vocab_words,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<II", _VERSION, len(blob)))
        f.write(blob)
        for chunk in payload:
            f.write(chunk)


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        version, blob_len = struct.unpack("<II", f.read(8))
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(f.read(blob_len).decode("utf-8"))
        groups: Dict[str, Dict[str, np.ndarray]] = {g: {} for g in _FIELDS}
        for group, name, shape in header["arrays"]:
            count = int(np.prod(shape)) if shape else 1
            raw = f.read(count * 8)
            if len(raw) != count * 8:
                raise ValueError(f"{path}: truncated checkpoint payload")
            arr = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
            groups[group][name] = arr
    return Checkpoint(
        stage=int(header["stage"]),
        iteration=int(header["iteration"]),
        best_val_cider=float(header["best_val_cider"]),
        model_config=dict(header["model_config"]),
        vocab_words=list(header["vocab_words"]),
        values=groups["values"],
        adam_m=groups["adam_m"],
        adam_v=groups["adam_v"],
        adam_step_count=int(header["adam_step_count"]),
        adam_betas=tuple(header["adam_betas"]),
        adam_eps=float(header["adam_eps"]),
        attribute_tokens=header["attribute_tokens"],
    )
