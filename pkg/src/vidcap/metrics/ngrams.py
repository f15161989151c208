"""N-gram counting and document-frequency statistics for CIDEr scoring."""

import json
import logging
import math
from collections import Counter
from typing import Dict, Iterable, List, Sequence, Tuple, Union

from vidcap.data.textproc import as_tokens

log = logging.getLogger(__name__)

NGram = Tuple[str, ...]
MAX_N = 4


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    """Counts of contiguous n-grams; empty when the sentence is shorter than n."""
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def all_ngram_counts(tokens: Sequence[str], max_n: int = MAX_N) -> Dict[int, Counter]:
    return {n: ngram_counts(tokens, n) for n in range(1, max_n + 1)}


class IdfTable:
    """Document frequencies over a reference corpus (one document = one clip's
    reference set).  idf(g) = ln(D / df(g)).  N-grams never seen in the corpus
    fall back to df = 1 (idf = ln D); each distinct fallback is logged once.
    """

    def __init__(self, df: Dict[NGram, int], num_docs: int):
        if num_docs < 1:
            raise ValueError("idf table needs at least one document")
        for g, d in df.items():
            if not 1 <= d <= num_docs:
                raise ValueError(f"df out of range for {g}: {d} not in [1, {num_docs}]")
        self.df = df
        self.num_docs = num_docs
        self._logged_misses: set = set()

    def idf(self, gram: NGram) -> float:
        d = self.df.get(gram)
        if d is None:
            d = 1
            if gram not in self._logged_misses and len(self._logged_misses) < 10_000:
                self._logged_misses.add(gram)
                log.debug("n-gram %r unseen in idf corpus; using df=1", gram)
        return math.log(self.num_docs / d)

    def to_json(self) -> str:
        entries = {" ".join(g): d for g, d in self.df.items()}
        return json.dumps({"num_docs": self.num_docs, "df": entries}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "IdfTable":
        obj = json.loads(text)
        df = {tuple(k.split(" ")): int(v) for k, v in obj["df"].items()}
        return cls(df, int(obj["num_docs"]))


def build_idf(ref_sets: Iterable[Sequence[Union[str, Sequence[str]]]],
              max_n: int = MAX_N) -> IdfTable:
    """df(g) = number of clips whose reference captions contain g."""
    df: Counter = Counter()
    num_docs = 0
    for refs in ref_sets:
        num_docs += 1
        seen: set = set()
        for ref in refs:
            toks = as_tokens(ref)
            for n in range(1, max_n + 1):
                seen.update(ngram_counts(toks, n))
        df.update(seen)
    if num_docs == 0:
        raise ValueError("empty reference corpus")
    return IdfTable(dict(df), num_docs)
