"""Two-layer LSTM encoder-decoder with a conv frame encoder and attribute head.

Layer 1 consumes projected frame features while encoding and zeros while
decoding; layer 2 always sees layer-1 output concatenated with a word
embedding (<pad> during encoding, the previous token during decoding).
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..data.textproc import BOS, EOS, PAD
from ..nn import tensor as T
from ..nn.layers import (LstmParams, LstmState, avgpool2, conv2d, dense, dropout,
                         embedding_lookup, flatten, log_softmax_pick, lstm_cell)
from ..nn.params import ParamStore, init_uniform, zeros
from ..nn.tensor import ShapeError, Tensor, no_grad
from .clips import VideoClip, sample_frames
from .config import CaptionerConfig

_GATES = ("i", "f", "o", "g")


@dataclass
class EncoderTrace:
    """Encoder output: final states of both layers, per-step state history,
    and the temporal mean of the projected frame features (attribute input)."""
    state1: LstmState
    state2: LstmState
    pooled: Tensor
    steps1: List[LstmState]
    steps2: List[LstmState]


@dataclass
class DecoderState:
    s1: LstmState
    s2: LstmState

    @property
    def rows(self) -> int:
        return self.s1.h.data.shape[0]


class Captioner:
    """Holds the parameter store and the forward passes; no training logic."""

    def __init__(self, config: CaptionerConfig, seed: int = 0):
        self.config = config
        self.params = ParamStore()
        rng = np.random.default_rng(seed)
        c = config
        add = self.params.add
        add("enc.conv1_w", init_uniform((3, 3, 3, c.conv1_channels), rng))
        add("enc.conv1_b", zeros((c.conv1_channels,)))
        add("enc.conv2_w", init_uniform((3, 3, c.conv1_channels, c.conv2_channels), rng))
        add("enc.conv2_b", zeros((c.conv2_channels,)))
        add("enc.fc_w", init_uniform((c.feat_dim, c.flat_dim), rng))
        add("enc.fc_b", zeros((c.feat_dim,)))
        add("proj.w", init_uniform((c.embed_dim, c.feat_dim), rng))
        add("proj.b", zeros((c.embed_dim,)))
        add("embed.table", init_uniform((c.vocab_size, c.embed_dim), rng))
        for layer, indim in (("lstm1", c.embed_dim),
                             ("lstm2", c.hidden_dim + c.embed_dim)):
            for gate in _GATES:
                add(f"{layer}.w_{gate}x", init_uniform((c.hidden_dim, indim), rng))
                add(f"{layer}.w_{gate}h", init_uniform((c.hidden_dim, c.hidden_dim), rng))
                add(f"{layer}.b_{gate}", zeros((c.hidden_dim,)))
        add("out.w", init_uniform((c.vocab_size, c.hidden_dim), rng))
        add("out.b", zeros((c.vocab_size,)))
        add("attr.w", init_uniform((c.attr_count, c.embed_dim), rng))
        add("attr.b", zeros((c.attr_count,)))

    def lstm_params(self, prefix: str) -> LstmParams:
        p = self.params
        args = []
        for gate in _GATES:
            args += [p[f"{prefix}.w_{gate}x"], p[f"{prefix}.w_{gate}h"],
                     p[f"{prefix}.b_{gate}"]]
        return LstmParams(*args)

    def freeze_encoder(self, frozen: bool = True) -> None:
        """Freeze (or thaw) the conv frame encoder; projection stays trainable."""
        self.params.freeze_prefix("enc.", frozen)

    def _drop(self, x: Tensor, training: bool, rng) -> Tensor:
        rate = self.config.dropout
        if rate == 0.0 or not training:
            return x
        if rng is None:
            raise ValueError("dropout is active; training forward passes need an rng")
        return dropout(x, rate, True, rng)

    # -- frame encoder ------------------------------------------------------

    def frame_encoder(self, frames) -> Tensor:
        """(H, W, C) or (B, H, W, C) pixels in [0, 1] -> feature rows.

        Accepts a Tensor to allow gradient checks w.r.t. the pixels; plain
        arrays enter the graph as constants.
        """
        x = frames if isinstance(frames, Tensor) else T.constant(
            np.asarray(frames, dtype=np.float64))
        s = self.config.frame_size
        single = x.data.ndim == 3
        if single:
            x = T.reshape(x, (1,) + x.data.shape)
        if x.data.ndim != 4 or x.data.shape[1:] != (s, s, 3):
            raise ShapeError(f"expected frames of shape ({s}, {s}, 3), "
                             f"got {frames.shape if hasattr(frames, 'shape') else '?'}")
        p = self.params
        h = T.relu(conv2d(x, p["enc.conv1_w"], p["enc.conv1_b"]))
        h = avgpool2(h)
        h = T.relu(conv2d(h, p["enc.conv2_w"], p["enc.conv2_b"]))
        h = avgpool2(h)
        f = dense(flatten(h), p["enc.fc_w"], p["enc.fc_b"])
        if single:
            f = T.reshape(f, (self.config.feat_dim,))
        return f

    def frame_features(self, clip: VideoClip) -> np.ndarray:
        """Frame-encoder outputs for every frame of a clip, graph-free.

        Wrapping the result in a feature-mode VideoClip reproduces the
        frame-mode forward pass exactly while the encoder is frozen.
        """
        if not clip.has_frames:
            raise ValueError(f"clip {clip.clip_id!r} already carries features")
        with no_grad():
            out = self.frame_encoder(clip.frames)
        return np.ascontiguousarray(out.data)

    # -- encoder ------------------------------------------------------------

    def encode(self, clips: Sequence[VideoClip], training: bool = False,
               rng: Optional[np.random.Generator] = None) -> EncoderTrace:
        clips = list(clips)
        if not clips:
            raise ValueError("empty clip batch")
        modes = {c.has_frames for c in clips}
        if len(modes) != 1:
            raise ValueError("cannot mix frame-mode and feature-mode clips in one batch")
        c = self.config
        p = self.params
        k = c.encoder_steps
        sampled = [sample_frames(clip, k) for clip in clips]
        if modes == {True}:
            per_step = [self.frame_encoder(np.stack([s[t] for s in sampled]))
                        for t in range(k)]
        else:
            for clip, f in zip(clips, sampled):
                if f.shape[1] != c.feat_dim:
                    raise ValueError(f"clip {clip.clip_id!r} features have dim "
                                     f"{f.shape[1]}, model expects {c.feat_dim}")
            per_step = [T.constant(np.stack([f[t] for f in sampled]))
                        for t in range(k)]
        proj = [dense(f, p["proj.w"], p["proj.b"]) for f in per_step]
        pooled = proj[0]
        for q in proj[1:]:
            pooled = T.add(pooled, q)
        pooled = T.scale(pooled, 1.0 / k)

        B = len(clips)
        zero_state = lambda: LstmState(T.constant(np.zeros((B, c.hidden_dim))),
                                       T.constant(np.zeros((B, c.hidden_dim))))
        s1, s2 = zero_state(), zero_state()
        p1, p2 = self.lstm_params("lstm1"), self.lstm_params("lstm2")
        pad_emb = embedding_lookup(np.full(B, PAD, dtype=np.int64), p["embed.table"])
        steps1: List[LstmState] = []
        steps2: List[LstmState] = []
        for t in range(k):
            s1 = lstm_cell(proj[t], s1, p1)
            h1 = self._drop(s1.h, training, rng)
            s2 = lstm_cell(T.concat_cols(h1, pad_emb), s2, p2)
            steps1.append(s1)
            steps2.append(s2)
        return EncoderTrace(s1, s2, pooled, steps1, steps2)

    def initial_state(self, trace: EncoderTrace) -> DecoderState:
        return DecoderState(trace.state1, trace.state2)

    # -- decoder ------------------------------------------------------------

    def decode_step(self, state: DecoderState, token_ids,
                    training: bool = False,
                    rng: Optional[np.random.Generator] = None):
        """Advance one step on the previous tokens; returns (state, logits)."""
        ids = np.asarray(token_ids, dtype=np.int64)
        B = state.rows
        if ids.shape != (B,):
            raise ShapeError(f"expected {B} token ids, got shape {ids.shape}")
        p = self.params
        emb = embedding_lookup(ids, p["embed.table"])
        zero_in = T.constant(np.zeros((B, self.config.embed_dim)))
        s1 = lstm_cell(zero_in, state.s1, self.lstm_params("lstm1"))
        h1 = self._drop(s1.h, training, rng)
        s2 = lstm_cell(T.concat_cols(h1, emb), state.s2, self.lstm_params("lstm2"))
        h2 = self._drop(s2.h, training, rng)
        logits = dense(h2, p["out.w"], p["out.b"])
        return DecoderState(s1, s2), logits

    # -- losses -------------------------------------------------------------

    def teacher_forced_loss(self, clips: Sequence[VideoClip],
                            captions: Sequence[Sequence[int]],
                            training: bool = True,
                            rng: Optional[np.random.Generator] = None) -> Tensor:
        """Mean over clips of the per-token negative log-likelihood.

        captions hold word ids only; <bos> is prepended and <eos> appended
        here, and <eos> counts toward each clip's token count.  Captions
        longer than decoder_steps-1 are truncated so the <eos> still fits.
        """
        clips = list(clips)
        caps = [[int(t) for t in cap] for cap in captions]
        if len(clips) != len(caps):
            raise ValueError(f"{len(clips)} clips but {len(caps)} captions")
        for clip, cap in zip(clips, caps):
            if not cap:
                raise ValueError(f"clip {clip.clip_id!r} has an empty caption")
            if any(t in (PAD, BOS, EOS) for t in cap):
                raise ValueError(f"clip {clip.clip_id!r}: captions must hold "
                                 "word ids only, no reserved tokens")
        limit = self.config.decoder_steps - 1
        caps = [cap[:limit] for cap in caps]
        lens = np.array([len(cap) + 1 for cap in caps], dtype=np.float64)
        tmax = int(lens.max())
        B = len(clips)
        inputs = np.full((B, tmax), PAD, dtype=np.int64)
        targets = np.full((B, tmax), PAD, dtype=np.int64)
        mask = np.zeros((B, tmax))
        for b, cap in enumerate(caps):
            n = len(cap)
            inputs[b, 0] = BOS
            inputs[b, 1:n + 1] = cap
            targets[b, :n] = cap
            targets[b, n] = EOS
            mask[b, :n + 1] = 1.0

        trace = self.encode(clips, training, rng)
        state = self.initial_state(trace)
        acc = None
        for t in range(tmax):
            state, logits = self.decode_step(state, inputs[:, t], training, rng)
            term = T.mul_const(log_softmax_pick(logits, targets[:, t]), mask[:, t])
            acc = term if acc is None else T.add(acc, term)
        per_clip = T.mul_const(acc, 1.0 / lens)
        return T.scale(T.tmean(per_clip), -1.0)

    def attribute_head(self, pooled: Tensor) -> Tensor:
        """Per-attribute probabilities from the pooled projected features."""
        p = self.params
        return T.sigmoid(dense(pooled, p["attr.w"], p["attr.b"]))
