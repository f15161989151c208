"""ROUGE-L: longest-common-subsequence F-measure, beta = 1.2, max over references."""

from typing import List, Sequence, Union

from vidcap.data.textproc import as_tokens

Caption = Union[str, Sequence[str]]

BETA = 1.2


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[len(b)]


def rouge_l(hyp: Caption, refs: Sequence[Caption], beta: float = BETA) -> float:
    """Per-clip score: max over references of the LCS F-measure."""
    if len(refs) == 0:
        raise ValueError("empty reference set")
    h = as_tokens(hyp)
    if not h:
        return 0.0
    best = 0.0
    for ref in refs:
        r = as_tokens(ref)
        ell = lcs_length(h, r)
        if ell == 0 or not r:
            continue
        p = ell / len(h)
        rec = ell / len(r)
        f = (1 + beta * beta) * p * rec / (rec + beta * beta * p)
        best = max(best, f)
    return best
