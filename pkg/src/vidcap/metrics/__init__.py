"""Exact caption metrics: BLEU4, ROUGE-L, METEOR (exact+stem), CIDEr-D."""

from vidcap.metrics.bleu import bleu4
from vidcap.metrics.cider import cider, cider_d
from vidcap.metrics.meteor import meteor_lite
from vidcap.metrics.ngrams import (MAX_N, IdfTable, all_ngram_counts, build_idf,
                                   ngram_counts)
from vidcap.metrics.report import MetricReport, score_corpus
from vidcap.metrics.rouge import lcs_length, rouge_l
from vidcap.metrics.stem import stem

__all__ = [
    "MAX_N", "IdfTable", "MetricReport", "all_ngram_counts", "bleu4", "build_idf",
    "cider", "cider_d", "lcs_length", "meteor_lite", "ngram_counts", "rouge_l",
    "score_corpus", "stem",
]
