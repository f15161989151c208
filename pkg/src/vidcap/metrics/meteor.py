"""METEOR-style score from a two-stage unigram alignment.

Stage 1 matches identical tokens, stage 2 matches leftover tokens whose
Porter stems agree.  Match counts are maximized stage by stage; among all
alignments achieving those counts, the one with the fewest chunks (runs of
pairs contiguous in both sentences) is used.  Per reference:
F_mean = 10PR/(R+9P), penalty = 0.5*(chunks/m)^3, score = F_mean*(1-penalty);
the clip score is the max over references.  Synonym and paraphrase stages of
the full metric are intentionally omitted (they need external databases).
"""

from collections import Counter
from typing import List, Sequence, Tuple, Union

from vidcap.data.textproc import as_tokens
from vidcap.metrics.stem import stem

Caption = Union[str, Sequence[str]]

_NODE_CAP = 300_000


def _alignment(hyp: List[str], ref: List[str]) -> Tuple[int, int]:
    """Return (matches, chunks) for the best alignment of hyp to ref."""
    H, R = len(hyp), len(ref)
    if H == 0 or R == 0:
        return 0, 0
    hstems = [stem(w) for w in hyp]
    rstems = [stem(w) for w in ref]
    hw, rw = Counter(hyp), Counter(ref)

    # stage-wise match counts are fixed by the token/stem multisets
    k_left = Counter({w: min(c, rw[w]) for w, c in hw.items() if w in rw})
    left_h: Counter = Counter()
    left_r: Counter = Counter()
    for w, c in hw.items():
        left_h[stem(w)] += c - k_left.get(w, 0)
    for w, c in rw.items():
        left_r[stem(w)] += c - k_left.get(w, 0)
    g_left = Counter({s: min(c, left_r[s]) for s, c in left_h.items()
                      if min(c, left_r[s]) > 0})
    m = sum(k_left.values()) + sum(g_left.values())
    if m == 0:
        return 0, 0

    # suffix token availability for pruning
    word_from = [Counter() for _ in range(H + 1)]
    stem_from = [Counter() for _ in range(H + 1)]
    for i in range(H - 1, -1, -1):
        word_from[i] = word_from[i + 1].copy()
        word_from[i][hyp[i]] += 1
        stem_from[i] = stem_from[i + 1].copy()
        stem_from[i][hstems[i]] += 1

    avail_w = Counter(ref)
    avail_s = Counter(rstems)
    exact_demand = Counter()
    for w, k in k_left.items():
        exact_demand[stem(w)] += k

    used = [False] * R
    best = [m + 1]  # chunks never exceed m
    nodes = [0]

    def feasible(i: int) -> bool:
        for w, k in k_left.items():
            if k > 0 and (word_from[i][w] < k or avail_w[w] < k):
                return False
        for s in set(g_left) | set(exact_demand):
            need = g_left[s] + exact_demand[s]
            if need > 0 and (stem_from[i][s] < need or avail_s[s] < need):
                return False
        return True

    def dfs(i: int, prev_i: int, prev_j: int, chunks: int) -> None:
        if chunks >= best[0] or nodes[0] > _NODE_CAP:
            return
        nodes[0] += 1
        if i == H:
            if not +k_left and not +g_left:
                best[0] = chunks
            return
        if not feasible(i):
            return
        w, s = hyp[i], hstems[i]
        candidates: List[Tuple[int, bool]] = []
        if k_left.get(w, 0) > 0:
            candidates += [(j, True) for j in range(R)
                           if not used[j] and ref[j] == w]
        if g_left.get(s, 0) > 0:
            candidates += [(j, False) for j in range(R)
                           if not used[j] and rstems[j] == s and ref[j] != w
                           and avail_w[ref[j]] - 1 >= k_left.get(ref[j], 0)]
        candidates.sort(key=lambda c: (c[0] != prev_j + 1, c[0]))
        for j, is_exact in candidates:
            used[j] = True
            avail_w[ref[j]] -= 1
            avail_s[s] -= 1
            if is_exact:
                k_left[w] -= 1
                exact_demand[s] -= 1
            else:
                g_left[s] -= 1
            nc = chunks + (0 if (prev_i == i - 1 and prev_j == j - 1) else 1)
            dfs(i + 1, i, j, nc)
            if is_exact:
                k_left[w] += 1
                exact_demand[s] += 1
            else:
                g_left[s] += 1
            avail_s[s] += 1
            avail_w[ref[j]] += 1
            used[j] = False
        dfs(i + 1, prev_i, prev_j, chunks)

    dfs(0, -2, -2, 0)
    chunks = best[0] if best[0] <= m else m
    return m, chunks


def meteor_lite(hyp: Caption, refs: Sequence[Caption]) -> float:
    """Per-clip score: max over references; 0 when nothing aligns."""
    if len(refs) == 0:
        raise ValueError("empty reference set")
    h = as_tokens(hyp)
    best = 0.0
    for ref in refs:
        r = as_tokens(ref)
        m, chunks = _alignment(h, r)
        if m == 0:
            continue
        p = m / len(h)
        rec = m / len(r)
        f_mean = 10.0 * p * rec / (rec + 9.0 * p)
        penalty = 0.5 * (chunks / m) ** 3
        best = max(best, f_mean * (1.0 - penalty))
    return best
