"""Caption tokenization and the token<->id vocabulary.

The same tokenizer feeds training, decoding, and every metric, so the reward
seen by the REINFORCE stage is computed over exactly the tokens the model is
trained on.
"""

import re
from collections import Counter
from typing import Iterable, List, Sequence, Union

PAD = 0
BOS = 1
EOS = 2
UNK = 3
SPECIALS = ("<pad>", "<bos>", "<eos>", "<unk>")

_PUNCT = re.compile(r"[.,!?;:'\"]")


def tokenize(text: str) -> List[str]:
    """Lowercase, strip punctuation, split on whitespace."""
    return _PUNCT.sub("", text.lower()).split()


def as_tokens(caption: Union[str, Sequence[str]]) -> List[str]:
    """Accept a raw string or an already-tokenized sequence."""
    if isinstance(caption, str):
        return tokenize(caption)
    return list(caption)


class Vocabulary:
    """Bijection between tokens and ids with reserved ids 0..3 for specials."""

    def __init__(self, tokens: Iterable[str]):
        self.id_to_token: List[str] = list(SPECIALS) + list(tokens)
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.id_to_token == other.id_to_token

    @property
    def words(self) -> List[str]:
        """Non-special tokens in id order; Vocabulary(words) round-trips."""
        return self.id_to_token[len(SPECIALS):]

    def encode(self, tokens: Sequence[str]) -> List[int]:
        """Map tokens to ids; unknown tokens map to <unk>."""
        return [self.token_to_id.get(t, UNK) for t in tokens]

    def decode(self, ids: Sequence[int]) -> List[str]:
        return [self.id_to_token[i] for i in ids]


def build_vocabulary(captions: Iterable[Union[str, Sequence[str]]],
                     min_count: int = 1) -> Vocabulary:
    """Vocabulary over training captions: specials 0-3 then tokens ordered by
    frequency descending, ties broken lexicographically.  Tokens below
    min_count are dropped (they encode to <unk>).
    """
    freq: Counter = Counter()
    for cap in captions:
        freq.update(as_tokens(cap))
    kept = [t for t, c in freq.items() if c >= min_count and t not in SPECIALS]
    kept.sort(key=lambda t: (-freq[t], t))
    return Vocabulary(kept)
