"""Decode a split and score it; the one evaluation path everything shares."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

from ..data.textproc import Vocabulary
from ..metrics.ngrams import IdfTable
from ..metrics.report import MetricReport, score_corpus
from ..model import Captioner, VideoClip, beam_search, greedy_decode_batch
from .corpus import CorpusData

DECODE_MODES = ("greedy", "beam")


@dataclass(frozen=True)
class DecodedCaption:
    clip_id: str
    tokens: List[str]
    token_ids: List[int]
    log_prob: float


def decode_split(model: Captioner, clips: Sequence[VideoClip],
                 vocab: Vocabulary, mode: str = "greedy",
                 beam_size: Optional[int] = None) -> List[DecodedCaption]:
    """Caption every clip with the requested decoder."""
    if mode not in DECODE_MODES:
        raise ValueError(f"unknown decode mode {mode!r}; expected one of "
                         f"{DECODE_MODES}")
    clips = list(clips)
    if not clips:
        raise ValueError("no clips to decode")
    if mode == "greedy":
        results = greedy_decode_batch(model, clips)
    else:
        results = [beam_search(model, clip, beam=beam_size) for clip in clips]
    return [DecodedCaption(clip_id=clip.clip_id,
                           tokens=vocab.decode(res.tokens),
                           token_ids=list(res.tokens),
                           log_prob=res.score)
            for clip, res in zip(clips, results)]


def score_decoded(decoded: Sequence[DecodedCaption], data: CorpusData,
                  idf: Optional[IdfTable] = None) -> MetricReport:
    hyps = [d.tokens for d in decoded]
    refs = data.refs_for([d.clip_id for d in decoded])
    return score_corpus(hyps, refs, data.idf if idf is None else idf)


def evaluate_split(model: Captioner, data: CorpusData, split: str,
                   mode: str = "greedy",
                   beam_size: Optional[int] = None) -> MetricReport:
    """MetricReport for a split; raises on an empty split."""
    clips = data.split_clips(split)
    if not clips:
        raise ValueError(f"split {split!r} is empty")
    decoded = decode_split(model, clips, data.vocab, mode, beam_size)
    return score_decoded(decoded, data)
