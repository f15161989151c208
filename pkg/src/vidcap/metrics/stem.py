"""Porter stemmer, classic algorithm, used by the stem stage of the METEOR
alignment.  Self-contained so stem matching needs no external lexical data.
"""

from typing import List, Tuple

_VOWELS = "aeiou"


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        # y is a vowel when preceded by a consonant
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of vowel->consonant transitions ([C](VC)^m[V] form)."""
    m = 0
    for i in range(1, len(stem)):
        if _is_consonant(stem, i) and not _is_consonant(stem, i - 1):
            m += 1
    return m


def _contains_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _double_consonant(word: str) -> bool:
    return (len(word) >= 2 and word[-1] == word[-2]
            and _is_consonant(word, len(word) - 1))


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    return (_is_consonant(word, len(word) - 3)
            and not _is_consonant(word, len(word) - 2)
            and _is_consonant(word, len(word) - 1)
            and word[-1] not in "wxy")


_STEP2 = sorted([
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
], key=lambda r: -len(r[0]))

_STEP3 = sorted([
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
], key=lambda r: -len(r[0]))

_STEP4 = sorted([
    "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent", "ion",
    "ism", "ate", "iti", "ous", "ive", "ize", "ou", "al", "er", "ic",
], key=len, reverse=True)


def _rule_pass(word: str, rules: List[Tuple[str, str]]) -> str:
    # Longest matching suffix decides; if its measure condition fails, no
    # shorter suffix is tried (per the algorithm definition).
    for suffix, repl in rules:
        if word.endswith(suffix):
            stem = word[:-len(suffix)]
            if _measure(stem) > 0:
                return stem + repl
            return word
    return word


def stem(word: str) -> str:
    w = word.lower()
    if len(w) <= 2:
        return w

    # step 1a: plurals
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif not w.endswith("ss") and w.endswith("s"):
        w = w[:-1]

    # step 1b: -ed / -ing
    adjust = False
    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    elif w.endswith("ed"):
        if _contains_vowel(w[:-2]):
            w = w[:-2]
            adjust = True
    elif w.endswith("ing"):
        if _contains_vowel(w[:-3]):
            w = w[:-3]
            adjust = True
    if adjust:
        if w.endswith(("at", "bl", "iz")):
            w += "e"
        elif _double_consonant(w) and w[-1] not in "lsz":
            w = w[:-1]
        elif _measure(w) == 1 and _ends_cvc(w):
            w += "e"

    # step 1c: terminal y
    if w.endswith("y") and _contains_vowel(w[:-1]):
        w = w[:-1] + "i"

    w = _rule_pass(w, _STEP2)
    w = _rule_pass(w, _STEP3)

    # step 4: strip residual suffixes when the measure exceeds 1
    for suffix in _STEP4:
        if w.endswith(suffix):
            stem_part = w[:-len(suffix)]
            if _measure(stem_part) > 1:
                if suffix == "ion" and stem_part[-1:] not in ("s", "t"):
                    break
                w = stem_part
            break

    # step 5a: terminal e
    if w.endswith("e"):
        m = _measure(w[:-1])
        if m > 1 or (m == 1 and not _ends_cvc(w[:-1])):
            w = w[:-1]

    # step 5b: double l
    if _measure(w) > 1 and _double_consonant(w) and w.endswith("l"):
        w = w[:-1]

    return w
