"""Differentiable layers: dense, activations, dropout, embedding, LSTM cell,
and the small conv stack used by the frame encoder.

Layers are fused tape ops (one node each) with hand-derived backward passes;
correctness is pinned by the finite-difference suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import ShapeError, Tensor, _attach, _wants_graph, mm_nn, mm_nt, mm_tn


def dense(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """y = W x + b. x may be (in,) or batched (B, in); W is (out, in)."""
    wd = w.data
    if wd.ndim != 2 or x.data.shape[-1] != wd.shape[1]:
        raise ShapeError(f"dense: x {x.data.shape} incompatible with W {wd.shape}")
    if b.data.shape != (wd.shape[0],):
        raise ShapeError(f"dense: b {b.data.shape} incompatible with W {wd.shape}")
    xd = x.data
    out = Tensor(mm_nt(xd, wd) + b.data)
    if _wants_graph(x, w, b):
        def bw(gs):
            (g,) = gs
            if x.requires_grad:
                x.accumulate(mm_nn(g, wd))
            if w.requires_grad:
                w.accumulate(mm_tn(g, xd) if xd.ndim == 2 else np.outer(g, xd))
            if b.requires_grad:
                b.accumulate(g.sum(axis=0) if xd.ndim == 2 else g)
        _attach(out, (x, w, b), bw)
    return out


def activation(x: Tensor, kind: str) -> Tensor:
    from . import tensor as T
    fns = {"sigmoid": T.sigmoid, "tanh": T.tanh, "softmax": T.softmax, "relu": T.relu}
    if kind not in fns:
        raise ValueError(f"unknown activation {kind!r}")
    return fns[kind](x)


def dropout(x: Tensor, rate: float, training: bool, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: survivors scaled by 1/(1-rate); identity at inference."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate {rate} outside [0, 1)")
    if not training or rate == 0.0:
        return x
    keep = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    from .tensor import mul_const
    return mul_const(x, keep)


def embedding_lookup(ids: np.ndarray, table: Tensor) -> Tensor:
    """Row gather from (vocab, dim); gradient scatters into touched rows."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.data.shape[0]):
        raise IndexError(f"embedding id out of range [0, {table.data.shape[0]})")
    out = Tensor(table.data[ids])
    if _wants_graph(table):
        def bw(gs):
            (g,) = gs
            dt = np.zeros_like(table.data)
            np.add.at(dt, ids, g)
            table.accumulate(dt)
        _attach(out, (table,), bw)
    return out


def log_softmax_pick(logits: Tensor, ids: np.ndarray) -> Tensor:
    """Per-row log-probability of the picked ids: fused log-softmax + gather."""
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    logp = z - lse
    ids = np.asarray(ids, dtype=np.int64)
    rows = np.arange(logits.data.shape[0])
    out = Tensor(logp[rows, ids])
    if _wants_graph(logits):
        sm = np.exp(logp)
        def bw(gs):
            (g,) = gs
            d = -sm * g[:, None]
            d[rows, ids] += g
            logits.accumulate(d)
        _attach(out, (logits,), bw)
    return out


# ---------------------------------------------------------------------------
# LSTM cell


@dataclass
class LstmParams:
    """The four gate blocks; each gate has an input map, a recurrent map and a bias."""
    w_ix: Tensor; w_ih: Tensor; b_i: Tensor
    w_fx: Tensor; w_fh: Tensor; b_f: Tensor
    w_ox: Tensor; w_oh: Tensor; b_o: Tensor
    w_gx: Tensor; w_gh: Tensor; b_g: Tensor

    @property
    def hidden_dim(self) -> int:
        return self.w_ix.data.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w_ix.data.shape[1]

    def tensors(self) -> list[Tensor]:
        return [self.w_ix, self.w_ih, self.b_i, self.w_fx, self.w_fh, self.b_f,
                self.w_ox, self.w_oh, self.b_o, self.w_gx, self.w_gh, self.b_g]


@dataclass
class LstmState:
    h: Tensor
    c: Tensor


def _sig(z):
    return 1.0 / (1.0 + np.exp(-z))


def lstm_cell(x: Tensor, prev: LstmState, p: LstmParams) -> LstmState:
    """One step: gates from affine maps, c = i*g + f*c_prev, h = o*tanh(c).

    x is (input_dim,) or (B, input_dim); states follow the same layout.
    """
    xd, hd, cd = x.data, prev.h.data, prev.c.data
    hidden, indim = p.hidden_dim, p.input_dim
    if xd.shape[-1] != indim:
        raise ShapeError(f"lstm_cell: x dim {xd.shape[-1]} != input gate dim {indim}")
    if hd.shape[-1] != hidden or cd.shape[-1] != hidden:
        raise ShapeError(f"lstm_cell: state dim {hd.shape[-1]}/{cd.shape[-1]} != "
                         f"recurrent gate dim {hidden}")
    for name, wx, wh, bias in (("i", p.w_ix, p.w_ih, p.b_i), ("f", p.w_fx, p.w_fh, p.b_f),
                               ("o", p.w_ox, p.w_oh, p.b_o), ("g", p.w_gx, p.w_gh, p.b_g)):
        if wx.data.shape != (hidden, indim) or wh.data.shape != (hidden, hidden) \
                or bias.data.shape != (hidden,):
            raise ShapeError(f"lstm_cell: gate {name} has inconsistent shapes")

    i = _sig(mm_nt(xd, p.w_ix.data) + mm_nt(hd, p.w_ih.data) + p.b_i.data)
    f = _sig(mm_nt(xd, p.w_fx.data) + mm_nt(hd, p.w_fh.data) + p.b_f.data)
    o = _sig(mm_nt(xd, p.w_ox.data) + mm_nt(hd, p.w_oh.data) + p.b_o.data)
    g = np.tanh(mm_nt(xd, p.w_gx.data) + mm_nt(hd, p.w_gh.data) + p.b_g.data)
    c = i * g + f * cd
    tc = np.tanh(c)
    h = o * tc

    h_out, c_out = Tensor(h), Tensor(c)
    parents = (x, prev.h, prev.c, *p.tensors())
    if _wants_graph(*parents):
        def bw(gs):
            dh, dc_in = gs
            if dh is None:
                dh = 0.0
            dc = (0.0 if dc_in is None else dc_in) + dh * o * (1.0 - tc * tc)
            dzo = dh * tc * o * (1.0 - o)
            dzi = dc * g * i * (1.0 - i)
            dzg = dc * i * (1.0 - g * g)
            dzf = dc * cd * f * (1.0 - f)

            batched = xd.ndim == 2
            def acc_gate(dz, wx, wh, bias):
                if wx.requires_grad:
                    wx.accumulate(mm_tn(dz, xd) if batched else np.outer(dz, xd))
                if wh.requires_grad:
                    wh.accumulate(mm_tn(dz, hd) if batched else np.outer(dz, hd))
                if bias.requires_grad:
                    bias.accumulate(dz.sum(axis=0) if batched else dz)

            acc_gate(dzi, p.w_ix, p.w_ih, p.b_i)
            acc_gate(dzf, p.w_fx, p.w_fh, p.b_f)
            acc_gate(dzo, p.w_ox, p.w_oh, p.b_o)
            acc_gate(dzg, p.w_gx, p.w_gh, p.b_g)
            if x.requires_grad:
                x.accumulate(mm_nn(dzi, p.w_ix.data) + mm_nn(dzf, p.w_fx.data)
                             + mm_nn(dzo, p.w_ox.data) + mm_nn(dzg, p.w_gx.data))
            if prev.h.requires_grad:
                prev.h.accumulate(mm_nn(dzi, p.w_ih.data) + mm_nn(dzf, p.w_fh.data)
                                  + mm_nn(dzo, p.w_oh.data) + mm_nn(dzg, p.w_gh.data))
            if prev.c.requires_grad:
                prev.c.accumulate(dc * f)
        _attach((h_out, c_out), parents, bw)
    return LstmState(h_out, c_out)


# ---------------------------------------------------------------------------
# conv stack primitives (frame encoder)


def conv2d(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """3x3 same-padding convolution; x is (B, H, W, Cin), w is (kh, kw, Cin, Cout)."""
    xd, wd = x.data, w.data
    kh, kw, cin, cout = wd.shape
    if xd.ndim != 4 or xd.shape[3] != cin:
        raise ShapeError(f"conv2d: x {xd.shape} incompatible with w {wd.shape}")
    ph, pw = kh // 2, kw // 2
    bsz, hh, ww = xd.shape[0], xd.shape[1], xd.shape[2]
    xp = np.pad(xd, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
    y = np.tile(b.data, (bsz, hh, ww, 1))
    for di in range(kh):
        for dj in range(kw):
            y += np.einsum("bhwc,cf->bhwf", xp[:, di:di + hh, dj:dj + ww, :],
                           wd[di, dj], optimize=False)
    out = Tensor(y)
    if _wants_graph(x, w, b):
        def bw(gs):
            (g,) = gs
            if b.requires_grad:
                b.accumulate(g.sum(axis=(0, 1, 2)))
            if w.requires_grad or x.requires_grad:
                dxp = np.zeros_like(xp) if x.requires_grad else None
                dw = np.zeros_like(wd) if w.requires_grad else None
                for di in range(kh):
                    for dj in range(kw):
                        sl = xp[:, di:di + hh, dj:dj + ww, :]
                        if dw is not None:
                            dw[di, dj] = np.einsum("bhwc,bhwf->cf", sl, g,
                                                   optimize=False)
                        if dxp is not None:
                            dxp[:, di:di + hh, dj:dj + ww, :] += np.einsum(
                                "bhwf,cf->bhwc", g, wd[di, dj], optimize=False)
                if dw is not None:
                    w.accumulate(dw)
                if dxp is not None:
                    x.accumulate(dxp[:, ph:ph + hh, pw:pw + ww, :])
        _attach(out, (x, w, b), bw)
    return out


def avgpool2(x: Tensor) -> Tensor:
    """2x2 average pooling with stride 2 on (B, H, W, C); H and W must be even."""
    xd = x.data
    bsz, hh, ww, ch = xd.shape
    if hh % 2 or ww % 2:
        raise ShapeError(f"avgpool2: odd spatial dims {xd.shape}")
    y = xd.reshape(bsz, hh // 2, 2, ww // 2, 2, ch).mean(axis=(2, 4))
    out = Tensor(y)
    if _wants_graph(x):
        def bw(gs):
            (g,) = gs
            up = np.repeat(np.repeat(g, 2, axis=1), 2, axis=2) * 0.25
            x.accumulate(up)
        _attach(out, (x,), bw)
    return out


def flatten(x: Tensor) -> Tensor:
    """(B, H, W, C) -> (B, H*W*C)."""
    from .tensor import reshape
    return reshape(x, (x.data.shape[0], -1))
