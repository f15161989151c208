"""Independent oracles used by the test suite.

Everything here is a straight-line transcription of the definitions under
test, written against plain numpy arrays and python loops, sharing no code
with the package implementation.
"""

from __future__ import annotations

import math

import numpy as np


def finite_diff(f, arrays, h=1e-5, coords=None, rng=None, max_coords=None):
    """Central finite differences of scalar f() w.r.t. the given arrays.

    f takes no arguments and reads the arrays in place. Returns a list of
    gradient arrays (entries not probed stay NaN when subsampling).
    """
    grads = []
    for a in arrays:
        g = np.full_like(a, np.nan)
        flat = a.reshape(-1)
        idx = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            idx = rng.choice(flat.size, size=max_coords, replace=False)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + h
            fp = f()
            flat[i] = orig - h
            fm = f()
            flat[i] = orig
            g.reshape(-1)[i] = (fp - fm) / (2 * h)
        grads.append(g)
    return grads


def rel_err(analytic, numeric):
    """Max relative error over the probed (non-NaN) coordinates."""
    mask = ~np.isnan(numeric)
    a = analytic[mask]
    n = numeric[mask]
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1.0)
    return np.abs(a - n) / denom


def sigmoid(z):
    return 1.0 / (1.0 + math.exp(-z))


def lstm_cell_scalar(x, h_prev, c_prev, p):
    """Scalar-loop transcription of the gate equations.

    p maps gate names to (w_x, w_h, b) numpy arrays with w_x (H, D),
    w_h (H, H), b (H,).
    """
    hid = p["i"][0].shape[0]
    i = np.zeros(hid)
    f = np.zeros(hid)
    o = np.zeros(hid)
    g = np.zeros(hid)
    for k in range(hid):
        zi = p["i"][2][k]
        zf = p["f"][2][k]
        zo = p["o"][2][k]
        zg = p["g"][2][k]
        for d in range(len(x)):
            zi += p["i"][0][k, d] * x[d]
            zf += p["f"][0][k, d] * x[d]
            zo += p["o"][0][k, d] * x[d]
            zg += p["g"][0][k, d] * x[d]
        for d in range(hid):
            zi += p["i"][1][k, d] * h_prev[d]
            zf += p["f"][1][k, d] * h_prev[d]
            zo += p["o"][1][k, d] * h_prev[d]
            zg += p["g"][1][k, d] * h_prev[d]
        i[k] = sigmoid(zi)
        f[k] = sigmoid(zf)
        o[k] = sigmoid(zo)
        g[k] = math.tanh(zg)
    c = np.array([i[k] * g[k] + f[k] * c_prev[k] for k in range(hid)])
    h = np.array([o[k] * math.tanh(c[k]) for k in range(hid)])
    return h, c


def dense_scalar(x, w, b):
    """Scalar-loop y = Wx + b."""
    out = np.zeros(w.shape[0])
    for i in range(w.shape[0]):
        acc = b[i]
        for j in range(w.shape[1]):
            acc += w[i, j] * x[j]
        out[i] = acc
    return out


def softmax_np(z):
    e = np.exp(z - np.max(z))
    return e / e.sum()


# ---------------------------------------------------------------------------
# metric oracles (straight-line, per the published metric definitions)


def ngram_counts(tokens, n):
    out = {}
    for i in range(len(tokens) - n + 1):
        g = tuple(tokens[i:i + n])
        out[g] = out.get(g, 0) + 1
    return out


def bleu4_oracle(hyps, refs_list):
    """Corpus BLEU4: pooled clipped precisions, closest-ref brevity penalty."""
    match = [0] * 4
    total = [0] * 4
    hyp_len = 0
    ref_len = 0
    for hyp, refs in zip(hyps, refs_list):
        hyp_len += len(hyp)
        best = min(refs, key=lambda r: (abs(len(r) - len(hyp)), len(r)))
        ref_len += len(best)
        for n in range(1, 5):
            hc = ngram_counts(hyp, n)
            clip = {}
            for r in refs:
                for g, c in ngram_counts(r, n).items():
                    clip[g] = max(clip.get(g, 0), c)
            for g, c in hc.items():
                match[n - 1] += min(c, clip.get(g, 0))
                total[n - 1] += c
    precisions = []
    for n in range(4):
        if total[n] == 0 or match[n] == 0:
            return 0.0
        precisions.append(match[n] / total[n])
    log_mean = sum(math.log(p) for p in precisions) / 4.0
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / max(hyp_len, 1))
    return bp * math.exp(log_mean)


def lcs_len(a, b):
    dp = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                dp[i][j] = dp[i - 1][j - 1] + 1
            else:
                dp[i][j] = max(dp[i - 1][j], dp[i][j - 1])
    return dp[len(a)][len(b)]


def rouge_l_oracle(hyp, refs, beta=1.2):
    best = 0.0
    for ref in refs:
        ell = lcs_len(hyp, ref)
        if ell == 0 or not hyp or not ref:
            continue
        p = ell / len(hyp)
        r = ell / len(ref)
        f = (1 + beta * beta) * p * r / (r + beta * beta * p)
        best = max(best, f)
    return best


def cider_d_oracle(hyp, refs, df, num_docs, sigma=6.0):
    """Straight-line CIDEr-D: length-normalized tf-idf vectors, clipped cosine,
    per-n Gaussian length penalty, averaged over n and references, x10."""
    def tfidf_vec(tokens, n):
        counts = ngram_counts(tokens, n)
        total = sum(counts.values())
        vec = {}
        for g, c in counts.items():
            idf = math.log(num_docs / max(1.0, df.get(g, 1.0)))
            vec[g] = (c / total) * idf if total > 0 else 0.0
        return vec

    def norm(vec):
        return math.sqrt(sum(v * v for v in vec.values()))

    score = 0.0
    for n in range(1, 5):
        vh = tfidf_vec(hyp, n)
        nh = norm(vh)
        acc = 0.0
        for ref in refs:
            vr = tfidf_vec(ref, n)
            nr = norm(vr)
            if nh == 0.0 or nr == 0.0:
                continue
            num = sum(min(vh[g], vr[g]) * vr[g] for g in vh if g in vr)
            delta = len(hyp) - len(ref)
            acc += math.exp(-delta * delta / (2 * sigma * sigma)) * num / (nh * nr)
        score += acc / len(refs)
    return 10.0 * score / 4.0


def adam_step_oracle(theta, g, m, v, t, lr, b1=0.9, b2=0.999, eps=1e-8):
    m = b1 * m + (1 - b1) * g
    v = b2 * v + (1 - b2) * g * g
    mh = m / (1 - b1 ** t)
    vh = v / (1 - b2 ** t)
    return theta - lr * mh / (np.sqrt(vh) + eps), m, v


def meteor_align_oracle(hyp, ref, stem_fn):
    """Brute-force best alignment: enumerate every injective partial mapping
    from hyp positions to ref positions over exact/stem-compatible pairs and
    pick the lexicographic best (n_exact, n_stem, -chunks). Returns (m, chunks)."""
    import itertools

    hstems = [stem_fn(w) for w in hyp]
    rstems = [stem_fn(w) for w in ref]
    choices = []
    for i, w in enumerate(hyp):
        opts = [None]
        for j, u in enumerate(ref):
            if u == w or rstems[j] == hstems[i]:
                opts.append(j)
        choices.append(opts)

    best = (-1, -1, 0)  # (n_exact, n_stem, -chunks)
    for combo in itertools.product(*choices):
        used = [j for j in combo if j is not None]
        if len(set(used)) != len(used):
            continue
        pairs = [(i, j) for i, j in enumerate(combo) if j is not None]
        n_exact = sum(1 for i, j in pairs if hyp[i] == ref[j])
        n_stem = len(pairs) - n_exact
        chunks = 0
        prev = None
        for i, j in pairs:
            if prev is None or not (i == prev[0] + 1 and j == prev[1] + 1):
                chunks += 1
            prev = (i, j)
        key = (n_exact, n_stem, -chunks)
        if key > best:
            best = key
    m = best[0] + best[1]
    return m, -best[2]
