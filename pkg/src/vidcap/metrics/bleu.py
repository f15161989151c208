"""Corpus-level BLEU4 with clipped modified precisions and brevity penalty.

Conventions: precisions pooled over the whole corpus before the geometric
mean; no smoothing, so the corpus score is 0 whenever any order has zero
clipped matches; effective reference length r uses the reference closest in
length to the hypothesis, ties resolved toward the shorter reference.
"""

import math
from typing import List, Sequence, Union

from vidcap.data.textproc import as_tokens
from vidcap.metrics.ngrams import ngram_counts

Caption = Union[str, Sequence[str]]


def _closest_ref_len(hyp_len: int, ref_lens: Sequence[int]) -> int:
    return min(ref_lens, key=lambda r: (abs(r - hyp_len), r))


def bleu4(hyps: Sequence[Caption], refs: Sequence[Sequence[Caption]]) -> float:
    if len(hyps) == 0:
        raise ValueError("empty hypothesis list")
    if len(hyps) != len(refs):
        raise ValueError(f"{len(hyps)} hypotheses vs {len(refs)} reference sets")

    matched = [0] * 5   # index by n
    total = [0] * 5
    hyp_len_sum = 0
    ref_len_sum = 0
    for hyp, ref_set in zip(hyps, refs):
        if len(ref_set) == 0:
            raise ValueError("empty reference set")
        h = as_tokens(hyp)
        rs = [as_tokens(r) for r in ref_set]
        hyp_len_sum += len(h)
        ref_len_sum += _closest_ref_len(len(h), [len(r) for r in rs])
        for n in range(1, 5):
            hc = ngram_counts(h, n)
            if not hc:
                continue
            clip = {}
            for r in rs:
                for g, c in ngram_counts(r, n).items():
                    if c > clip.get(g, 0):
                        clip[g] = c
            matched[n] += sum(min(c, clip.get(g, 0)) for g, c in hc.items())
            total[n] += sum(hc.values())

    if hyp_len_sum == 0:
        return 0.0
    if any(matched[n] == 0 or total[n] == 0 for n in range(1, 5)):
        return 0.0
    log_p = sum(math.log(matched[n] / total[n]) for n in range(1, 5)) / 4.0
    bp = min(1.0, math.exp(1.0 - ref_len_sum / hyp_len_sum))
    return bp * math.exp(log_p)
