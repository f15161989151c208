"""Greedy, sampled and beam-search caption decoding.

All decoders run on a softmax with <pad> and <bos> suppressed (logit -inf),
so emitted captions never contain either token and recorded log-probs are
the exact log-probabilities of the executed policy.  <eos> terminates a
caption; its log-prob is recorded but the token itself is not kept.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..data.textproc import BOS, EOS, PAD
from ..nn import tensor as T
from ..nn.layers import LstmState, log_softmax_pick
from ..nn.tensor import Tensor, no_grad
from .captioner import Captioner, DecoderState, EncoderTrace
from .clips import VideoClip

_SUPPRESSED = (PAD, BOS)


@dataclass(frozen=True)
class DecodeResult:
    """A finished caption: word ids (no <bos>, truncated at first <eos>),
    the per-step log-probs (terminal <eos> step included) and their sum."""
    tokens: Tuple[int, ...]
    log_probs: Tuple[float, ...]

    @property
    def score(self) -> float:
        return float(sum(self.log_probs))

    @property
    def normalized(self) -> float:
        return self.score / max(len(self.log_probs), 1)


@dataclass
class Trajectory:
    """One sampled caption: tokens (terminal <eos> excluded), per-step float
    log-probs, the summed log-prob as a graph tensor, and a reward slot."""
    tokens: Tuple[int, ...]
    log_probs: Tuple[float, ...]
    logp: Tensor
    reward: float = 0.0


def _suppress_row(vocab_size: int) -> np.ndarray:
    row = np.zeros(vocab_size)
    row[list(_SUPPRESSED)] = -np.inf
    return row


def _log_softmax_rows(z: np.ndarray) -> np.ndarray:
    m = z.max(axis=-1, keepdims=True)
    return z - (m + np.log(np.exp(z - m).sum(axis=-1, keepdims=True)))


# -- greedy -----------------------------------------------------------------


def greedy_decode_batch(model: Captioner, clips: Sequence[VideoClip]) -> List[DecodeResult]:
    """Argmax roll-out (ties -> lowest id); graph-free and deterministic."""
    clips = list(clips)
    with no_grad():
        trace = model.encode(clips)
        state = model.initial_state(trace)
        return greedy_from_state(model, state)


def greedy_from_state(model: Captioner, state: DecoderState) -> List[DecodeResult]:
    with no_grad():
        B = state.rows
        mask = _suppress_row(model.config.vocab_size)
        cur = np.full(B, BOS, dtype=np.int64)
        alive = np.ones(B, dtype=bool)
        toks: List[List[int]] = [[] for _ in range(B)]
        lps: List[List[float]] = [[] for _ in range(B)]
        for _ in range(model.config.decoder_steps):
            state, logits = model.decode_step(state, cur)
            z = logits.data + mask
            logp = _log_softmax_rows(z)
            ids = z.argmax(axis=-1)
            for b in range(B):
                if not alive[b]:
                    continue
                lps[b].append(float(logp[b, ids[b]]))
                if ids[b] == EOS:
                    alive[b] = False
                else:
                    toks[b].append(int(ids[b]))
            cur = np.where(alive, ids, PAD).astype(np.int64)
            if not alive.any():
                break
    return [DecodeResult(tuple(toks[b]), tuple(lps[b])) for b in range(B)]


def greedy_decode(model: Captioner, clip: VideoClip) -> DecodeResult:
    return greedy_decode_batch(model, [clip])[0]


# -- sampling ---------------------------------------------------------------


def sample_rows(model: Captioner, state: DecoderState,
                rng: np.random.Generator, training: bool = False):
    """Multinomial roll-out over all rows of a decoder state.

    Returns (tokens, log_probs, acc) where acc is the (rows,) tensor of
    summed step log-probs with finished rows masked out, kept on the graph
    so policy-gradient losses can backpropagate through it.
    """
    rows = state.rows
    mask_const = T.constant(_suppress_row(model.config.vocab_size))
    cur = np.full(rows, BOS, dtype=np.int64)
    alive = np.ones(rows, dtype=bool)
    toks: List[List[int]] = [[] for _ in range(rows)]
    lps: List[List[float]] = [[] for _ in range(rows)]
    acc = None
    for _ in range(model.config.decoder_steps):
        state, logits = model.decode_step(state, cur, training, rng)
        masked = T.add(logits, mask_const)
        logp = _log_softmax_rows(masked.data)
        probs = np.exp(logp)
        u = rng.random(rows)
        ids = np.minimum((probs.cumsum(axis=-1) < u[:, None]).sum(axis=-1),
                         model.config.vocab_size - 1).astype(np.int64)
        term = T.mul_const(log_softmax_pick(masked, ids), alive.astype(np.float64))
        acc = term if acc is None else T.add(acc, term)
        for r in range(rows):
            if not alive[r]:
                continue
            lps[r].append(float(logp[r, ids[r]]))
            if ids[r] == EOS:
                alive[r] = False
            else:
                toks[r].append(int(ids[r]))
        cur = np.where(alive, ids, PAD).astype(np.int64)
        if not alive.any():
            break
    return toks, lps, acc


def sample_caption(model: Captioner, clip: VideoClip, rng: np.random.Generator,
                   training: bool = False) -> Trajectory:
    """Draw one caption; the trajectory's logp tensor stays differentiable."""
    trace = model.encode([clip], training, rng)
    toks, lps, acc = sample_rows(model, model.initial_state(trace), rng, training)
    return Trajectory(tuple(toks[0]), tuple(lps[0]), T.tsum(acc))


def sample_captions(model: Captioner, clip: VideoClip, m: int,
                    rng: np.random.Generator, training: bool = False,
                    trace: Optional[EncoderTrace] = None) -> List[Trajectory]:
    """Draw m captions from one clip, sharing a single encoder pass."""
    if m < 1:
        raise ValueError(f"need m >= 1 trajectories, got {m}")
    if trace is None:
        trace = model.encode([clip], training, rng)
    out = []
    for _ in range(m):
        toks, lps, acc = sample_rows(model, model.initial_state(trace), rng, training)
        out.append(Trajectory(tuple(toks[0]), tuple(lps[0]), T.tsum(acc)))
    return out


@dataclass
class BatchSample:
    """m samples for each of B clips, row-major (row = clip*m + draw).

    logp_rows is the (B*m,) tensor of summed step log-probs on the graph.
    """
    tokens: List[List[int]]
    log_probs: List[List[float]]
    logp_rows: Tensor
    m: int


def sample_batch(model: Captioner, clips: Sequence[VideoClip], m: int,
                 rng: np.random.Generator, training: bool = True,
                 trace: Optional[EncoderTrace] = None) -> BatchSample:
    """Tile the encoder states m times per clip and roll all samples at once.

    Pass a precomputed trace to share one encoder graph with other heads
    (the multitask loss backpropagates through it exactly once).
    """
    if m < 1:
        raise ValueError(f"need m >= 1 trajectories, got {m}")
    clips = list(clips)
    if trace is None:
        trace = model.encode(clips, training, rng)
    state = DecoderState(
        s1=LstmState(T.tile_rows(trace.state1.h, m), T.tile_rows(trace.state1.c, m)),
        s2=LstmState(T.tile_rows(trace.state2.h, m), T.tile_rows(trace.state2.c, m)))
    toks, lps, acc = sample_rows(model, state, rng, training)
    return BatchSample(toks, lps, acc, m)


# -- beam search ------------------------------------------------------------


@dataclass
class _Hyp:
    tokens: Tuple[int, ...]
    log_probs: Tuple[float, ...]
    score: float


def beam_search(model: Captioner, clip: VideoClip,
                beam: Optional[int] = None) -> DecodeResult:
    """Length-normalized beam search.

    Hypotheses are ranked by summed log-prob while alive; one that selects
    <eos> retires to a finished pool.  The winner is the pool entry with the
    highest score/length, ties broken by the lexicographically smallest
    token sequence.  If no hypothesis ever emits <eos>, the step-capped
    live hypotheses stand in for the pool.
    """
    width = model.config.beam_size if beam is None else beam
    if width < 1:
        raise ValueError(f"beam width must be >= 1, got {width}")
    c = model.config
    suppress = _suppress_row(c.vocab_size)
    with no_grad():
        trace = model.encode([clip])
        live = [_Hyp((), (), 0.0)]
        s1h = trace.state1.h.data
        s1c = trace.state1.c.data
        s2h = trace.state2.h.data
        s2c = trace.state2.c.data
        finished: List[_Hyp] = []
        for _ in range(c.decoder_steps):
            cur = np.array([h.tokens[-1] if h.tokens else BOS for h in live],
                           dtype=np.int64)
            state = DecoderState(
                s1=LstmState(T.constant(s1h), T.constant(s1c)),
                s2=LstmState(T.constant(s2h), T.constant(s2c)))
            state, logits = model.decode_step(state, cur)
            logp = _log_softmax_rows(logits.data + suppress)
            candidates = []
            for li, hyp in enumerate(live):
                for v in range(c.vocab_size):
                    if v in _SUPPRESSED:
                        continue
                    lp = logp[li, v]
                    candidates.append((-(hyp.score + lp), hyp.tokens + (v,), li, v, lp))
            candidates.sort(key=lambda cand: (cand[0], cand[1]))
            next_live = []
            rows = []
            for neg, seq, li, v, lp in candidates[:width]:
                hyp = live[li]
                grown = _Hyp(seq, hyp.log_probs + (float(lp),), -neg)
                if v == EOS:
                    finished.append(_Hyp(hyp.tokens, grown.log_probs, grown.score))
                else:
                    next_live.append(grown)
                    rows.append(li)
            if not next_live:
                break
            idx = np.array(rows)
            s1h, s1c = state.s1.h.data[idx], state.s1.c.data[idx]
            s2h, s2c = state.s2.h.data[idx], state.s2.c.data[idx]
            live = next_live
    pool = finished if finished else live
    best = min(pool, key=lambda h: (-h.score / max(len(h.log_probs), 1), h.tokens))
    return DecodeResult(best.tokens, best.log_probs)
