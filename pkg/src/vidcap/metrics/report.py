"""Corpus-level scoring across all four caption metrics."""

from dataclasses import asdict, dataclass
from typing import Dict, List, Sequence, Union

from vidcap.data.textproc import as_tokens
from vidcap.metrics.bleu import bleu4
from vidcap.metrics.cider import cider_d
from vidcap.metrics.meteor import meteor_lite
from vidcap.metrics.ngrams import IdfTable
from vidcap.metrics.rouge import rouge_l

Caption = Union[str, Sequence[str]]


@dataclass(frozen=True)
class MetricReport:
    bleu4: float
    rouge_l: float
    meteor: float
    cider: float

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)

    def table(self) -> str:
        """Plain-text table in the conventional column order."""
        header = f"{'BLEU4':>8} {'ROUGE-L':>8} {'METEOR':>8} {'CIDEr':>8}"
        row = (f"{self.bleu4:8.4f} {self.rouge_l:8.4f} "
               f"{self.meteor:8.4f} {self.cider:8.4f}")
        return header + "\n" + row


def score_corpus(hyps: Sequence[Caption], refs: Sequence[Sequence[Caption]],
                 idf: IdfTable) -> MetricReport:
    """BLEU4 is corpus-pooled; the other three are means of per-clip scores."""
    if len(hyps) != len(refs):
        raise ValueError(f"{len(hyps)} hypotheses vs {len(refs)} reference sets")
    if len(hyps) == 0:
        raise ValueError("empty hypothesis list")
    hyp_tokens = [as_tokens(h) for h in hyps]
    ref_tokens = [[as_tokens(r) for r in rs] for rs in refs]
    n = len(hyps)
    return MetricReport(
        bleu4=bleu4(hyp_tokens, ref_tokens),
        rouge_l=sum(rouge_l(h, rs) for h, rs in zip(hyp_tokens, ref_tokens)) / n,
        meteor=sum(meteor_lite(h, rs) for h, rs in zip(hyp_tokens, ref_tokens)) / n,
        cider=sum(cider_d(h, rs, idf) for h, rs in zip(hyp_tokens, ref_tokens)) / n,
    )
