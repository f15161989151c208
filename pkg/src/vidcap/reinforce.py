"""Self-critical multi-trajectory policy gradient and the multitask mix.

The estimator is L_r = -(1/M) sum_m (r(s_m) - b) * log p(s_m), with log p
the SUM of per-step log-probs, the weights (r - b) held constant, and b the
reward of the model's own greedy decode under the same parameters.
"""

from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from .data.textproc import Vocabulary
from .metrics.cider import cider, cider_d
from .metrics.ngrams import IdfTable
from .model.captioner import Captioner
from .model.clips import VideoClip
from .model.decoding import Trajectory, greedy_decode_batch
from .nn import tensor as T
from .nn.tensor import ShapeError, Tensor


@dataclass
class RewardContext:
    """Everything needed to score captions during policy-gradient training:
    the id->word map, per-clip reference token lists, the corpus IdfTable,
    the trajectory count M and the reward flavor."""
    vocab: Vocabulary
    refs: Dict[str, List[List[str]]]
    idf: IdfTable
    m: int = 4
    plain_cider: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"need m >= 1 trajectories, got {self.m}")

    def refs_for(self, clip_id: str) -> List[List[str]]:
        if clip_id not in self.refs:
            raise KeyError(f"no references for clip {clip_id!r}")
        return self.refs[clip_id]

    def reward_of_ids(self, token_ids: Sequence[int], clip_id: str) -> float:
        words = self.vocab.decode(list(token_ids))
        return compute_reward(words, self.refs_for(clip_id), self.idf,
                              plain=self.plain_cider)


def compute_reward(caption: Sequence[str], refs: Sequence[Sequence[str]],
                   idf: IdfTable, plain: bool = False) -> float:
    """Per-clip consensus reward of a tokenized caption; empty captions score 0."""
    caption = list(caption)
    if not caption:
        return 0.0
    scorer = cider if plain else cider_d
    return scorer(caption, refs, idf)


def self_critical_baseline(model: Captioner, clips: Sequence[VideoClip],
                           ctx: RewardContext) -> np.ndarray:
    """Greedy-decode reward per clip; graph-free, so no gradient flows through b."""
    clips = list(clips)
    results = greedy_decode_batch(model, clips)
    return np.array([ctx.reward_of_ids(r.tokens, c.clip_id)
                     for c, r in zip(clips, results)])


def reinforce_plus_loss(trajectories: Sequence[Trajectory], baseline: float) -> Tensor:
    """Eq-style per-clip loss over M trajectories with scalar logp tensors."""
    trajectories = list(trajectories)
    if not trajectories:
        raise ValueError("need at least one trajectory (M >= 1)")
    acc = None
    for tr in trajectories:
        term = T.scale(tr.logp, float(tr.reward) - float(baseline))
        acc = term if acc is None else T.add(acc, term)
    return T.scale(acc, -1.0 / len(trajectories))


def reinforce_loss_rows(logp_rows: Tensor, rewards: np.ndarray,
                        baselines: np.ndarray) -> Tensor:
    """Batched form: rows hold M samples per clip, row-major.

    -mean over rows of (r - b) * logp equals the batch mean of the per-clip
    M-trajectory losses, since every clip contributes exactly M rows.
    """
    w = np.asarray(rewards, dtype=np.float64) - np.asarray(baselines, dtype=np.float64)
    if w.shape != logp_rows.data.shape:
        raise ShapeError(f"weights {w.shape} vs logp rows {logp_rows.data.shape}")
    return T.scale(T.tmean(T.mul_const(logp_rows, w)), -1.0)


def multitask_loss(l_r, l_a, alpha: float) -> Tensor:
    """Convex combination alpha * L_r + (1 - alpha) * L_a."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    l_r = l_r if isinstance(l_r, Tensor) else T.constant(l_r)
    l_a = l_a if isinstance(l_a, Tensor) else T.constant(l_a)
    return T.add(T.scale(l_r, alpha), T.scale(l_a, 1.0 - alpha))
