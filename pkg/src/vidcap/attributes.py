"""Attribute mining from training captions and the attribute prediction loss.

Attributes are the most frequent content words (nouns/verbs/adjectives per a
bundled word list, stopwords removed) of the training captions.  A clip's
label vector marks which attributes occur in any of its reference captions.
"""

import logging
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Iterable, List, Optional, Sequence, Set, Union

import numpy as np

from vidcap.data.textproc import as_tokens
from vidcap.nn import tensor as T
from vidcap.nn.tensor import Tensor

log = logging.getLogger(__name__)

_CLAMP = 1e-12


def _bundled(name: str) -> Set[str]:
    text = resources.files("vidcap").joinpath(f"wordlists/{name}").read_text("utf-8")
    return {line.strip() for line in text.splitlines() if line.strip()}


def load_stopwords() -> Set[str]:
    return _bundled("stopwords.txt")


def load_content_words() -> Set[str]:
    return _bundled("content_words.txt")


@dataclass
class AttributeLexicon:
    tokens: List[str]
    index: Dict[str, int] = field(init=False)

    def __post_init__(self):
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("duplicate attribute tokens")
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def to_text(self) -> str:
        return "\n".join(self.tokens) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "AttributeLexicon":
        return cls([line.strip() for line in text.splitlines() if line.strip()])


def mine_attributes(captions: Iterable[Union[str, Sequence[str]]], n: int,
                    content_words: Optional[Set[str]] = None,
                    stopwords: Optional[Set[str]] = None) -> AttributeLexicon:
    """Top-n content words of the corpus by frequency (ties lexicographic)."""
    if n < 1:
        raise ValueError("attribute count must be >= 1")
    if content_words is None:
        content_words = load_content_words()
    if stopwords is None:
        stopwords = load_stopwords()
    freq: Dict[str, int] = {}
    total = 0
    for cap in captions:
        total += 1
        for tok in as_tokens(cap):
            if tok in stopwords or tok not in content_words:
                continue
            freq[tok] = freq.get(tok, 0) + 1
    if total == 0:
        raise ValueError("empty caption corpus")
    ranked = sorted(freq, key=lambda t: (-freq[t], t))
    if len(ranked) < n:
        log.warning("only %d attribute candidates for requested %d",
                    len(ranked), n)
    return AttributeLexicon(ranked[:n])


def label_clip(captions: Sequence[Union[str, Sequence[str]]],
               lexicon: AttributeLexicon) -> np.ndarray:
    """Binary vector: entry i set iff attribute i occurs in any caption."""
    present: Set[str] = set()
    for cap in captions:
        present.update(as_tokens(cap))
    y = np.zeros(len(lexicon))
    for tok in present:
        idx = lexicon.index.get(tok)
        if idx is not None:
            y[idx] = 1.0
    return y


def attribute_loss(q: Tensor, y: np.ndarray) -> Tensor:
    """Mean binary cross-entropy -(1/N) sum_i [y_i log q_i + (1-y_i) log(1-q_i)].

    q may be (N,) or batched (B, N); y must match.  Probabilities are clamped
    to [1e-12, 1-1e-12] before the logs.
    """
    y = np.asarray(y, dtype=float)
    if q.data.shape != y.shape:
        raise T.ShapeError(f"probabilities {q.data.shape} vs labels {y.shape}")
    qc = T.clamp(q, _CLAMP, 1.0 - _CLAMP)
    pos = T.mul_const(T.tlog(qc), y)
    neg = T.mul_const(T.tlog(T.affine_const(qc, -1.0, 1.0)), 1.0 - y)
    return T.scale(T.tmean(T.add(pos, neg)), -1.0)
