"""Independent reference implementations used only by the tests.

Everything here is deliberately written in a different style from the
package (scalar loops, recursion, brute-force counting) so that agreement
between package and oracle is meaningful evidence, not a shared bug.
"""

import math
from functools import lru_cache


def sigmoid_scalar(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def lstm_step_scalar(params, x, h_prev, c_prev):
    """Entry-by-entry LSTM step.  ``params`` maps gate names to nested
    Python lists; vectors are flat lists."""
    hidden = len(h_prev)

    def affine(wx, wh, b, j):
        total = b[j][0]
        for k in range(len(x)):
            total += wx[j][k] * x[k]
        for k in range(hidden):
            total += wh[j][k] * h_prev[k]
        return total

    h, c = [0.0] * hidden, [0.0] * hidden
    for j in range(hidden):
        i_j = sigmoid_scalar(affine(params["W_xi"], params["W_hi"], params["b_i"], j))
        f_j = sigmoid_scalar(affine(params["W_xf"], params["W_hf"], params["b_f"], j))
        o_j = sigmoid_scalar(affine(params["W_xo"], params["W_ho"], params["b_o"], j))
        g_j = math.tanh(affine(params["W_xg"], params["W_hg"], params["b_g"], j))
        c[j] = f_j * c_prev[j] + i_j * g_j
        h[j] = o_j * math.tanh(c[j])
    return h, c


def gru_step_scalar(params, x, h_prev):
    """Entry-by-entry GRU step; reset gate applied to the recurrent term."""
    hidden = len(h_prev)

    def affine(wx, wh, b, j, hvec):
        total = b[j][0]
        for k in range(len(x)):
            total += wx[j][k] * x[k]
        for k in range(hidden):
            total += wh[j][k] * hvec[k]
        return total

    h = [0.0] * hidden
    for j in range(hidden):
        r_j = sigmoid_scalar(affine(params["W_xr"], params["W_hr"], params["b_r"], j, h_prev))
        z_j = sigmoid_scalar(affine(params["W_xz"], params["W_hz"], params["b_z"], j, h_prev))
        # the reset gate for THIS unit's candidate needs every unit's r
        rh = [0.0] * hidden
        for k in range(hidden):
            r_k = sigmoid_scalar(affine(params["W_xr"], params["W_hr"], params["b_r"], k, h_prev))
            rh[k] = r_k * h_prev[k]
        ht_j = math.tanh(affine(params["W_xh"], params["W_hh"], params["b_h"], j, rh))
        h[j] = z_j * h_prev[j] + (1.0 - z_j) * ht_j
    return h


def edit_distance_recursive(a: str, b: str) -> int:
    """Memoized recursive Levenshtein distance."""

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        cost = 0 if a[i - 1] == b[j - 1] else 1
        return min(go(i - 1, j) + 1, go(i, j - 1) + 1, go(i - 1, j - 1) + cost)

    return go(len(a), len(b))


def lcs_recursive(a, b) -> int:
    """Memoized recursive longest common subsequence length."""
    a, b = tuple(a), tuple(b)

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == 0 or j == 0:
            return 0
        if a[i - 1] == b[j - 1]:
            return go(i - 1, j - 1) + 1
        return max(go(i - 1, j), go(i, j - 1))

    return go(len(a), len(b))


def ngrams_list(tokens, n):
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def bleu_oracle(items, max_n=4):
    """Corpus BLEU by brute-force list counting.

    ``items`` is a list of (candidate, [references]) token-sequence pairs.
    """
    scores = []
    total_cand = sum(len(c) for c, _ in items)
    total_ref = 0
    for cand, refs in items:
        best = None
        for ref in refs:
            key = (abs(len(ref) - len(cand)), len(ref))
            if best is None or key < best:
                best = key
        total_ref += best[1]
    for k in range(1, max_n + 1):
        matched = 0
        guesses = 0
        for cand, refs in items:
            cand_ngrams = ngrams_list(cand, k)
            guesses += len(cand_ngrams)
            for ng in set(cand_ngrams):
                cand_count = cand_ngrams.count(ng)
                ref_max = max(ngrams_list(r, k).count(ng) for r in refs)
                matched += min(cand_count, ref_max)
        scores.append((matched, guesses))
    if total_cand == 0:
        return [0.0] * max_n
    bp = 1.0 if total_cand >= total_ref else math.exp(1.0 - total_ref / total_cand)
    out = []
    for k in range(1, max_n + 1):
        product = 1.0
        dead = False
        for m, g in scores[:k]:
            if g == 0 or m == 0:
                dead = True
                break
            product *= m / g
        out.append(0.0 if dead else bp * product ** (1.0 / k))
    return out


def rouge_l_oracle(items, beta=1.2):
    total = 0.0
    for cand, refs in items:
        best = 0.0
        for ref in refs:
            lcs = lcs_recursive(cand, ref)
            if lcs == 0 or not cand or not ref:
                continue
            p, r = lcs / len(cand), lcs / len(ref)
            f = (1 + beta * beta) * p * r / (r + beta * beta * p)
            best = max(best, f)
        total += best
    return total / len(items)


def meteor_exact_oracle(items):
    total = 0.0
    for cand, refs in items:
        best = 0.0
        for ref in refs:
            taken = set()
            pairs = []
            for i, tok in enumerate(cand):
                for j, rtok in enumerate(ref):
                    if j not in taken and rtok == tok:
                        taken.add(j)
                        pairs.append((i, j))
                        break
            if not pairs:
                continue
            chunks = 1
            for a, b in zip(pairs, pairs[1:]):
                if b[0] != a[0] + 1 or b[1] != a[1] + 1:
                    chunks += 1
            m = len(pairs)
            p, r = m / len(cand), m / len(ref)
            fmean = 10 * p * r / (r + 9 * p)
            best = max(best, fmean * (1 - 0.5 * (chunks / m) ** 3))
        total += best
    return total / len(items)


def cider_oracle(items, sigma=6.0, max_n=4):
    """Spreadsheet-style CIDEr-D: explicit df table, per-order tf-idf dicts,
    clipped dot products, gaussian length penalty, x10."""
    n_items = len(items)
    df = {}
    for _, refs in items:
        seen = set()
        for ref in refs:
            for k in range(1, max_n + 1):
                seen.update(ngrams_list(ref, k))
        for ng in seen:
            df[ng] = df.get(ng, 0) + 1

    def vec(tokens, order):
        ngs = ngrams_list(tokens, order)
        out = {}
        for ng in set(ngs):
            idf = math.log(n_items) - math.log(max(1.0, df.get(ng, 0)))
            out[ng] = ngs.count(ng) * idf
        return out

    def norm(v):
        return math.sqrt(sum(w * w for w in v.values()))

    total = 0.0
    for cand, refs in items:
        per_ref = 0.0
        for ref in refs:
            order_sum = 0.0
            for k in range(1, max_n + 1):
                cv, rv = vec(cand, k), vec(ref, k)
                num = sum(min(w, rv.get(ng, 0.0)) * rv.get(ng, 0.0) for ng, w in cv.items())
                nc, nr = norm(cv), norm(rv)
                sim = num / (nc * nr) if nc > 0 and nr > 0 else 0.0
                delta = len(cand) - len(ref)
                order_sum += sim * math.exp(-delta * delta / (2 * sigma * sigma))
            per_ref += order_sum / max_n
        total += 10.0 * per_ref / len(refs)
    return total / n_items


def adam_trajectory_scalar(g_sequence, x0, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Hand-executed Adam recurrence for one scalar parameter."""
    x, m, v = x0, 0.0, 0.0
    for t, g in enumerate(g_sequence, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1 ** t)
        v_hat = v / (1 - beta2 ** t)
        x = x - lr * m_hat / (math.sqrt(v_hat) + eps)
    return x
