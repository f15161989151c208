"""Three-stage training loops over a loaded corpus.

Stage 1 teacher-forces captions with the frame encoder frozen.  Stage 2
fine-tunes with the self-critical multi-sample policy gradient, encoder
still frozen.  Stage 3 unfreezes everything and optimizes the weighted
multitask objective (caption loss plus attribute loss).

All stages share one engine: per-iteration minibatch, loss, backward, Adam
step, periodic greedy validation with best-checkpoint tracking and
early stopping.  A non-finite loss aborts immediately.  The greedy baseline
of stage 2/3 is recomputed from the current parameters every iteration.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..attributes import attribute_loss
from ..model import (Captioner, CaptionerConfig, VideoClip, desk_config,
                     sample_batch)
from ..nn.adam import AdamState, adam_step
from ..reinforce import (RewardContext, multitask_loss, reinforce_loss_rows,
                         self_critical_baseline)
from .checkpoint import (Checkpoint, adam_from_checkpoint,
                         model_from_checkpoint, snapshot)
from .config import TrainConfig
from .corpus import CorpusData
from .evaluate import decode_split, score_decoded


class TrainingDiverged(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass
class IterationRecord:
    iteration: int
    reward_mean: float
    baseline_mean: float
    l_r: float
    l_a: float
    loss: float


@dataclass
class TrainOutcome:
    checkpoint: Checkpoint            # best validation snapshot
    final_checkpoint: Checkpoint      # state when the loop stopped
    records: List[IterationRecord]
    evals: List[Tuple[int, float]]    # (iteration, val CIDEr-D)
    best_val_cider: float
    best_iteration: int


LOG_COLUMNS = ("iteration", "reward_mean", "baseline_mean", "l_r", "l_a",
               "loss")


def write_log_csv(path, records: Sequence[IterationRecord]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(LOG_COLUMNS)
        for r in records:
            writer.writerow([r.iteration, r.reward_mean, r.baseline_mean,
                             r.l_r, r.l_a, r.loss])


def cache_features(model: Captioner, clips: Sequence[VideoClip]) -> List[VideoClip]:
    """Swap frame payloads for precomputed features.  Only valid while the
    encoder stays frozen; the swap is bit-exact with the frame-mode forward."""
    return [c if not c.has_frames else
            VideoClip(c.clip_id, features=model.frame_features(c))
            for c in clips]


def _require_frames(clips: Sequence[VideoClip], why: str) -> None:
    for c in clips:
        if not c.has_frames:
            raise ValueError(
                f"{why} training updates the frame encoder and needs "
                f"frame-mode clips; clip {c.clip_id!r} carries only "
                f"precomputed features")


def _check_vocab(ck: Checkpoint, data: CorpusData) -> None:
    if list(ck.vocab_words) != list(data.vocab.words):
        raise ValueError("checkpoint vocabulary does not match this corpus")


def _check_stage(ck: Checkpoint, target: int, force: bool) -> None:
    if force:
        return
    if ck.stage != target - 1:
        raise ValueError(
            f"checkpoint carries stage tag {ck.stage}; stage {target} "
            f"training expects a stage-{target - 1} checkpoint "
            f"(pass force to override)")


def _train_loop(model: Captioner, adam: AdamState, config: TrainConfig,
                data: CorpusData, train_clips: List[VideoClip],
                val_clips: List[VideoClip],
                loss_fn: Callable[[List[VideoClip], np.random.Generator],
                                  Tuple[object, Dict[str, float]]]) -> TrainOutcome:
    rng = np.random.default_rng(config.seed)
    records: List[IterationRecord] = []
    evals: List[Tuple[int, float]] = []

    def val_cider() -> float:
        decoded = decode_split(model, val_clips, data.vocab, "greedy")
        return score_decoded(decoded, data).cider

    best = val_cider()
    best_it = 0
    best_ck = snapshot(model, adam, stage=config.stage, iteration=0,
                       best_val_cider=best, vocab=data.vocab,
                       lexicon=data.lexicon)
    evals.append((0, best))
    stalled = 0

    n = len(train_clips)
    take = min(config.batch_size, n)
    it = 0
    for it in range(1, config.max_iterations + 1):
        idx = rng.choice(n, size=take, replace=False)
        batch = [train_clips[i] for i in idx]
        loss, stats = loss_fn(batch, rng)
        value = float(loss.data)
        if not np.isfinite(value):
            raise TrainingDiverged(
                f"stage {config.stage}: loss became {value} at iteration "
                f"{it} (lr={config.lr}); training aborted")
        model.params.zero_grads()
        loss.backward()
        adam_step(model.params, adam, config.lr)
        records.append(IterationRecord(iteration=it, loss=value, **stats))

        if it % config.eval_interval == 0:
            v = val_cider()
            evals.append((it, v))
            if v > best:
                best, best_it, stalled = v, it, 0
                best_ck = snapshot(model, adam, stage=config.stage,
                                   iteration=it, best_val_cider=v,
                                   vocab=data.vocab, lexicon=data.lexicon)
            else:
                stalled += 1
                if stalled >= config.patience:
                    break
    final_ck = snapshot(model, adam, stage=config.stage, iteration=it,
                        best_val_cider=best, vocab=data.vocab,
                        lexicon=data.lexicon)
    return TrainOutcome(checkpoint=best_ck, final_checkpoint=final_ck,
                        records=records, evals=evals, best_val_cider=best,
                        best_iteration=best_it)


_NO_RL = dict(reward_mean=float("nan"), baseline_mean=float("nan"),
              l_r=float("nan"), l_a=float("nan"))


def _pick_captions(data: CorpusData, batch: List[VideoClip],
                   rng: np.random.Generator) -> List[List[int]]:
    chosen = []
    for clip in batch:
        options = data.encoded[clip.clip_id]
        chosen.append(options[int(rng.integers(len(options)))])
    return chosen


def step1_train(config: TrainConfig, data: CorpusData,
                checkpoint: Optional[Checkpoint] = None,
                model_config: Optional[CaptionerConfig] = None,
                force: bool = False) -> TrainOutcome:
    """Cross-entropy warm start (or, with encoder_frozen=False, a direct
    end-to-end cross-entropy baseline trained from scratch)."""
    if config.stage != 1:
        raise ValueError(f"step1_train got a stage-{config.stage} config")
    if checkpoint is not None:
        _check_vocab(checkpoint, data)
        if checkpoint.stage != 1 and not force:
            raise ValueError(
                f"checkpoint carries stage tag {checkpoint.stage}; stage 1 "
                f"training resumes stage-1 checkpoints only (pass force to "
                f"override)")
        model = model_from_checkpoint(checkpoint)
        adam = (adam_from_checkpoint(checkpoint, model)
                if checkpoint.stage == 1 else AdamState(model.params))
    else:
        if model_config is None:
            model_config = desk_config(vocab_size=len(data.vocab),
                                       attr_count=len(data.lexicon))
        if model_config.vocab_size != len(data.vocab):
            raise ValueError(
                f"model vocab_size {model_config.vocab_size} does not match "
                f"corpus vocabulary of {len(data.vocab)}")
        model = Captioner(model_config, seed=config.seed)
        adam = AdamState(model.params)
    model.freeze_encoder(config.encoder_frozen)
    # the attribute branch only trains under the stage-3 multitask loss
    model.params.freeze_prefix("attr.")

    train_clips = data.split_clips("train")
    val_clips = data.split_clips("val")
    if config.encoder_frozen:
        train_clips = cache_features(model, train_clips)
        val_clips = cache_features(model, val_clips)
    else:
        _require_frames(train_clips + val_clips, "end-to-end")

    def loss_fn(batch, rng):
        caps = _pick_captions(data, batch, rng)
        loss = model.teacher_forced_loss(batch, caps, training=True, rng=rng)
        return loss, dict(_NO_RL)

    return _train_loop(model, adam, config, data, train_clips, val_clips,
                       loss_fn)


def step2_train(config: TrainConfig, data: CorpusData, checkpoint: Checkpoint,
                force: bool = False) -> TrainOutcome:
    """Self-critical policy-gradient fine-tune on the caption reward."""
    if config.stage != 2:
        raise ValueError(f"step2_train got a stage-{config.stage} config")
    _check_vocab(checkpoint, data)
    _check_stage(checkpoint, 2, force)
    model = model_from_checkpoint(checkpoint)
    adam = (adam_from_checkpoint(checkpoint, model)
            if checkpoint.stage == 2 else AdamState(model.params))
    model.freeze_encoder(config.encoder_frozen)
    model.params.freeze_prefix("attr.")

    train_clips = data.split_clips("train")
    val_clips = data.split_clips("val")
    if config.encoder_frozen:
        train_clips = cache_features(model, train_clips)
        val_clips = cache_features(model, val_clips)

    ctx = RewardContext(vocab=data.vocab, refs=data.refs, idf=data.idf,
                        m=config.m, plain_cider=config.plain_cider)

    def loss_fn(batch, rng):
        baseline = self_critical_baseline(model, batch, ctx)
        bs = sample_batch(model, batch, config.m, rng, training=True)
        rewards = np.array([
            ctx.reward_of_ids(bs.tokens[r], batch[r // config.m].clip_id)
            for r in range(len(bs.tokens))])
        loss = reinforce_loss_rows(bs.logp_rows, rewards,
                                   np.repeat(baseline, config.m))
        return loss, dict(reward_mean=float(rewards.mean()),
                          baseline_mean=float(baseline.mean()),
                          l_r=float(loss.data), l_a=float("nan"))

    return _train_loop(model, adam, config, data, train_clips, val_clips,
                       loss_fn)


def step3_train(config: TrainConfig, data: CorpusData, checkpoint: Checkpoint,
                force: bool = False) -> TrainOutcome:
    """End-to-end multitask fine-tune; the encoder trains through both the
    caption loss and the attribute branch."""
    if config.stage != 3:
        raise ValueError(f"step3_train got a stage-{config.stage} config")
    _check_vocab(checkpoint, data)
    _check_stage(checkpoint, 3, force)
    model = model_from_checkpoint(checkpoint)
    adam = (adam_from_checkpoint(checkpoint, model)
            if checkpoint.stage == 3 else AdamState(model.params))
    model.freeze_encoder(False)
    model.params.freeze_prefix("attr.", frozen=not config.use_attributes)

    train_clips = data.split_clips("train")
    val_clips = data.split_clips("val")
    _require_frames(train_clips + val_clips, "end-to-end")

    ctx = RewardContext(vocab=data.vocab, refs=data.refs, idf=data.idf,
                        m=config.m, plain_cider=config.plain_cider)

    def loss_fn(batch, rng):
        stats: Dict[str, float] = dict(_NO_RL)
        if config.caption_loss == "rl":
            trace = model.encode(batch, training=True, rng=rng)
            baseline = self_critical_baseline(model, batch, ctx)
            bs = sample_batch(model, batch, config.m, rng, training=True,
                              trace=trace)
            rewards = np.array([
                ctx.reward_of_ids(bs.tokens[r], batch[r // config.m].clip_id)
                for r in range(len(bs.tokens))])
            caption_term = reinforce_loss_rows(bs.logp_rows, rewards,
                                               np.repeat(baseline, config.m))
            stats.update(reward_mean=float(rewards.mean()),
                         baseline_mean=float(baseline.mean()),
                         l_r=float(caption_term.data))
        else:
            caps = _pick_captions(data, batch, rng)
            caption_term = model.teacher_forced_loss(batch, caps,
                                                     training=True, rng=rng)
            trace = None
        if not config.use_attributes:
            return caption_term, stats
        if trace is None:
            trace = model.encode(batch, training=True, rng=rng)
        y = np.stack([data.labels[c.clip_id] for c in batch])
        l_a = attribute_loss(model.attribute_head(trace.pooled), y)
        stats["l_a"] = float(l_a.data)
        loss = multitask_loss(caption_term, l_a, config.alpha)
        return loss, stats

    return _train_loop(model, adam, config, data, train_clips, val_clips,
                       loss_fn)


def reward_window_means(records: Sequence[IterationRecord],
                        window: int = 100) -> List[float]:
    """Mean sampled reward over consecutive full windows of iterations."""
    rewards = [r.reward_mean for r in records]
    means = []
    for start in range(0, len(rewards) - window + 1, window):
        means.append(float(np.mean(rewards[start:start + window])))
    return means


def count_curve_violations(means: Sequence[float]) -> int:
    """How many window-to-window drops the reward curve shows."""
    return sum(1 for a, b in zip(means, means[1:]) if b < a)
