"""Corpus-level caption metrics: BLEU-1..4, ROUGE-L, CIDEr-D, and an
exact-match METEOR variant.

Inputs are already-tokenized commands; the only normalization applied here
is lowercasing.  METEOR is computed without stemming or synonym resources
(exact unigram matches only) and is reported as ``METEOR_exact`` so its
numbers are never confused with resource-backed METEOR scores.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Sequence

from .errors import DataError

CIDER_SIGMA = 6.0
CIDER_MAX_N = 4
ROUGE_BETA = 1.2


@dataclass(frozen=True)
class CorpusItem:
    video_id: str
    candidate: tuple[str, ...]
    references: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class Corpus:
    items: tuple[CorpusItem, ...]

    def __post_init__(self):
        if not self.items:
            raise DataError("metric corpus must contain at least one item")
        for item in self.items:
            if not item.references:
                raise DataError(f"item {item.video_id!r} has no references")


def make_corpus(entries) -> Corpus:
    """Build a corpus from (video_id, candidate tokens, [reference tokens, ...])
    triples, lowercasing every token."""
    items = []
    for video_id, candidate, references in entries:
        items.append(CorpusItem(
            video_id=str(video_id),
            candidate=tuple(t.lower() for t in candidate),
            references=tuple(tuple(t.lower() for t in ref) for ref in references),
        ))
    return Corpus(tuple(items))


@dataclass(frozen=True)
class EvalReport:
    bleu_1: float
    bleu_2: float
    bleu_3: float
    bleu_4: float
    meteor_exact: float
    rouge_l: float
    cider: float

    def rows(self) -> list[tuple[str, float]]:
        return [
            ("Bleu_1", self.bleu_1),
            ("Bleu_2", self.bleu_2),
            ("Bleu_3", self.bleu_3),
            ("Bleu_4", self.bleu_4),
            ("METEOR_exact", self.meteor_exact),
            ("ROUGE_L", self.rouge_l),
            ("CIDEr", self.cider),
        ]

    def to_text(self) -> str:
        lines = [f"{name:<14}{value:.3f}" for name, value in self.rows()]
        lines.append("# METEOR_exact uses exact unigram matching only "
                     "(no stemming or synonyms)")
        return "\n".join(lines) + "\n"


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(corpus: Corpus, max_n: int = 4) -> list[float]:
    """Corpus-level BLEU for orders 1..max_n.

    Modified n-gram precision (candidate counts clipped by the per-reference
    maximum), pooled over the corpus; geometric mean over orders; brevity
    penalty e^(1 - r/c) when the total candidate length c falls short of r,
    the sum of closest reference lengths (ties toward the shorter).  No
    smoothing: a zero pooled precision zeroes that order and all higher ones.
    """
    clipped = [0] * max_n
    guesses = [0] * max_n
    cand_len = 0
    ref_len = 0
    for item in corpus.items:
        c = len(item.candidate)
        cand_len += c
        ref_len += min((abs(len(r) - c), len(r)) for r in item.references)[1]
        for k in range(1, max_n + 1):
            counts = _ngram_counts(item.candidate, k)
            max_ref = Counter()
            for ref in item.references:
                for ng, cnt in _ngram_counts(ref, k).items():
                    if cnt > max_ref[ng]:
                        max_ref[ng] = cnt
            clipped[k - 1] += sum(min(cnt, max_ref[ng]) for ng, cnt in counts.items())
            guesses[k - 1] += max(0, c - k + 1)
    if cand_len == 0:
        return [0.0] * max_n
    bp = 1.0 if cand_len >= ref_len else math.exp(1.0 - ref_len / cand_len)
    precisions = [clipped[i] / guesses[i] if guesses[i] > 0 else 0.0 for i in range(max_n)]
    scores = []
    for k in range(1, max_n + 1):
        if any(p == 0.0 for p in precisions[:k]):
            scores.append(0.0)
        else:
            scores.append(bp * math.exp(sum(math.log(p) for p in precisions[:k]) / k))
    return scores


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for ai in a:
        cur = [0] * (len(b) + 1)
        for j, bj in enumerate(b, start=1):
            cur[j] = prev[j - 1] + 1 if ai == bj else max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l(corpus: Corpus) -> float:
    """Mean over items of the best-reference LCS F-measure (beta = 1.2)."""
    total = 0.0
    for item in corpus.items:
        best = 0.0
        for ref in item.references:
            lcs = _lcs_length(item.candidate, ref)
            if lcs == 0:
                continue
            p = lcs / len(item.candidate)
            r = lcs / len(ref)
            beta2 = ROUGE_BETA ** 2
            best = max(best, (1 + beta2) * p * r / (r + beta2 * p))
        total += best
    return total / len(corpus.items)


def _meteor_align(candidate, reference):
    """Leftmost-greedy exact unigram alignment; each reference token is
    consumed at most once.  Returns (matches, chunks)."""
    used = [False] * len(reference)
    pairs = []
    for i, tok in enumerate(candidate):
        for j, ref_tok in enumerate(reference):
            if not used[j] and ref_tok == tok:
                used[j] = True
                pairs.append((i, j))
                break
    if not pairs:
        return 0, 0
    chunks = 1
    for (i0, j0), (i1, j1) in zip(pairs, pairs[1:]):
        if i1 != i0 + 1 or j1 != j0 + 1:
            chunks += 1
    return len(pairs), chunks


def meteor_exact(corpus: Corpus) -> float:
    """Exact-match METEOR: F_mean = 10PR/(R+9P), fragmentation penalty
    0.5*(chunks/matches)^3, best reference per item, mean over items."""
    total = 0.0
    for item in corpus.items:
        best = 0.0
        for ref in item.references:
            m, chunks = _meteor_align(item.candidate, ref)
            if m == 0:
                continue
            p = m / len(item.candidate)
            r = m / len(ref)
            f_mean = 10.0 * p * r / (r + 9.0 * p)
            penalty = 0.5 * (chunks / m) ** 3
            best = max(best, f_mean * (1.0 - penalty))
        total += best
    return total / len(corpus.items)


def _tfidf_vector(counts: Counter, doc_freq, log_n):
    """Per-order tf-idf maps and their norms; idf floors df at 1 so n-grams
    absent from every reference still weigh log(N) on the candidate side."""
    vecs = [defaultdict(float) for _ in range(CIDER_MAX_N)]
    norms = [0.0] * CIDER_MAX_N
    for ng, tf in counts.items():
        n = len(ng) - 1
        idf = log_n - math.log(max(1.0, doc_freq[ng]))
        vecs[n][ng] = tf * idf
        norms[n] += (tf * idf) ** 2
    return vecs, [math.sqrt(x) for x in norms]


def cider(corpus: Corpus) -> float:
    """CIDEr-D: clipped tf-idf cosine per n-gram order 1..4 against each
    reference, a gaussian length penalty (sigma = 6), mean over orders,
    average over references, x10, mean over items.

    Document frequency counts, per n-gram, the number of items whose
    reference set contains it.  A single-item corpus makes every idf zero
    and the score degenerates to 0; it is computed but flagged.
    """
    if len(corpus.items) == 1:
        warnings.warn("cider on a single-item corpus: all idf weights are zero",
                      stacklevel=2)
    doc_freq: Counter = Counter()
    for item in corpus.items:
        seen = set()
        for ref in item.references:
            for k in range(1, CIDER_MAX_N + 1):
                seen.update(_ngram_counts(ref, k))
        doc_freq.update(seen)
    log_n = math.log(len(corpus.items))
    total = 0.0
    for item in corpus.items:
        cand_counts = Counter()
        for k in range(1, CIDER_MAX_N + 1):
            cand_counts.update(_ngram_counts(item.candidate, k))
        cand_vecs, cand_norms = _tfidf_vector(cand_counts, doc_freq, log_n)
        item_score = 0.0
        for ref in item.references:
            ref_counts = Counter()
            for k in range(1, CIDER_MAX_N + 1):
                ref_counts.update(_ngram_counts(ref, k))
            ref_vecs, ref_norms = _tfidf_vector(ref_counts, doc_freq, log_n)
            delta = float(len(item.candidate) - len(ref))
            sim_sum = 0.0
            for n in range(CIDER_MAX_N):
                num = sum(min(w, ref_vecs[n][ng]) * ref_vecs[n][ng]
                          for ng, w in cand_vecs[n].items())
                if cand_norms[n] > 0.0 and ref_norms[n] > 0.0:
                    num /= cand_norms[n] * ref_norms[n]
                else:
                    num = 0.0
                sim_sum += num * math.exp(-(delta ** 2) / (2.0 * CIDER_SIGMA ** 2))
            item_score += sim_sum / CIDER_MAX_N
        total += 10.0 * item_score / len(item.references)
    return total / len(corpus.items)


def evaluate(corpus: Corpus) -> EvalReport:
    """All metrics in one report."""
    b = bleu(corpus, 4)
    return EvalReport(
        bleu_1=b[0], bleu_2=b[1], bleu_3=b[2], bleu_4=b[3],
        meteor_exact=meteor_exact(corpus),
        rouge_l=rouge_l(corpus),
        cider=cider(corpus),
    )
