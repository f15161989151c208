"""Consensus-based caption scoring over tf-idf n-gram vectors (n = 1..4).

cider_d is the default variant: hypothesis counts clipped to the reference,
Gaussian length penalty (sigma = 6), similarity averaged over n and over
references, scaled by 10 so scores live in [0, 10].  cider is the unclipped,
unpenalized cosine variant behind the same interface (also scaled by 10 so a
reward flag can swap the two without rescaling).  Term frequencies are
normalized by the sentence's total n-gram count at each order.
"""

import math
from typing import Dict, Sequence, Tuple, Union

from vidcap.data.textproc import as_tokens
from vidcap.metrics.ngrams import MAX_N, IdfTable, NGram, ngram_counts

Caption = Union[str, Sequence[str]]


def _tfidf(tokens: Sequence[str], idf: IdfTable,
           n: int) -> Tuple[Dict[NGram, float], float]:
    counts = ngram_counts(tokens, n)
    total = sum(counts.values())
    if total == 0:
        return {}, 0.0
    vec = {g: (c / total) * idf.idf(g) for g, c in counts.items()}
    norm = math.sqrt(sum(v * v for v in vec.values()))
    return vec, norm


def cider_d(hyp: Caption, refs: Sequence[Caption], idf: IdfTable,
            sigma: float = 6.0) -> float:
    if len(refs) == 0:
        raise ValueError("empty reference set")
    h = as_tokens(hyp)
    hv = [_tfidf(h, idf, n) for n in range(1, MAX_N + 1)]
    score = 0.0
    for ref in refs:
        r = as_tokens(ref)
        penalty = math.exp(-((len(h) - len(r)) ** 2) / (2.0 * sigma * sigma))
        sim = 0.0
        for n in range(1, MAX_N + 1):
            vec_h, norm_h = hv[n - 1]
            vec_r, norm_r = _tfidf(r, idf, n)
            if norm_h == 0.0 or norm_r == 0.0:
                continue
            num = sum(min(vec_h[g], vec_r[g]) * vec_r[g]
                      for g in vec_h if g in vec_r)
            sim += num / (norm_h * norm_r)
        score += 10.0 * penalty * sim / MAX_N
    return score / len(refs)


def cider(hyp: Caption, refs: Sequence[Caption], idf: IdfTable) -> float:
    """Plain cosine variant: no count clipping, no length penalty."""
    if len(refs) == 0:
        raise ValueError("empty reference set")
    h = as_tokens(hyp)
    hv = [_tfidf(h, idf, n) for n in range(1, MAX_N + 1)]
    score = 0.0
    for ref in refs:
        r = as_tokens(ref)
        sim = 0.0
        for n in range(1, MAX_N + 1):
            vec_h, norm_h = hv[n - 1]
            vec_r, norm_r = _tfidf(r, idf, n)
            if norm_h == 0.0 or norm_r == 0.0:
                continue
            num = sum(vec_h[g] * vec_r[g] for g in vec_h if g in vec_r)
            sim += num / (norm_h * norm_r)
        score += 10.0 * sim / MAX_N
    return score / len(refs)
