import warnings

import numpy as np
import pytest

from oracles import (bleu_oracle, cider_oracle, meteor_exact_oracle,
                     rouge_l_oracle)
from v2c.errors import DataError
from v2c.metrics import (Corpus, bleu, cider, evaluate, make_corpus,
                         meteor_exact, rouge_l)


def corpus_of(*entries):
    return make_corpus(
        (f"v{i:03d}", cand, refs) for i, (cand, refs) in enumerate(entries))


def random_corpus(rng, n_items, vocab=("a", "b", "c", "d", "e", "f")):
    entries = []
    for _ in range(n_items):
        cand = [vocab[rng.integers(len(vocab))] for _ in range(rng.integers(1, 8))]
        refs = [[vocab[rng.integers(len(vocab))] for _ in range(rng.integers(1, 8))]
                for _ in range(rng.integers(1, 3))]
        entries.append((cand, refs))
    return entries


PERFECT = [
    (["righthand", "grasp", "bottle", "now"], [["righthand", "grasp", "bottle", "now"]]),
    (["lefthand", "reach", "pan", "fast"], [["lefthand", "reach", "pan", "fast"]]),
    (["righthand", "pour", "milk", "cup"], [["righthand", "pour", "milk", "cup"]]),
]


class TestBleu:
    def test_perfect_match_is_one(self):
        scores = bleu(corpus_of(*PERFECT), 4)
        np.testing.assert_allclose(scores, 1.0, atol=1e-12)

    def test_two_thirds_unigram(self):
        c = corpus_of((["righthand", "grasp", "bottle"],
                       [["righthand", "grasp", "cup"]]))
        scores = bleu(c, 4)
        assert abs(scores[0] - 2 / 3) < 1e-12

    def test_disjoint_is_zero(self):
        c = corpus_of((["a", "b"], [["c", "d"]]))
        assert bleu(c, 4) == [0.0] * 4

    def test_empty_candidate_safe(self):
        c = corpus_of(([], [["a", "b"]]), (["a"], [["a"]]))
        scores = bleu(c, 4)
        assert all(0.0 <= s <= 1.0 for s in scores)

    def test_matches_oracle_on_random_corpora(self):
        rng = np.random.default_rng(30)
        for _ in range(30):
            entries = random_corpus(rng, int(rng.integers(1, 6)))
            got = bleu(corpus_of(*entries), 4)
            want = bleu_oracle(entries, 4)
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_monotone_in_order(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            entries = random_corpus(rng, int(rng.integers(1, 6)))
            scores = bleu(corpus_of(*entries), 4)
            for a, b in zip(scores, scores[1:]):
                assert b <= a + 1e-12

    def test_item_order_invariant(self):
        rng = np.random.default_rng(32)
        entries = random_corpus(rng, 5)
        base = bleu(corpus_of(*entries), 4)
        np.testing.assert_allclose(bleu(corpus_of(*entries[::-1]), 4), base, atol=1e-15)


class TestRougeL:
    def test_identical_is_one(self):
        assert rouge_l(corpus_of(*PERFECT)) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_is_zero(self):
        assert rouge_l(corpus_of((["a", "b"], [["c", "d"]]))) == 0.0

    def test_lcs_worked_example(self):
        # LCS("a b c d", "a c d e") = "a c d": P = R = 3/4, so F = 3/4
        c = corpus_of((["a", "b", "c", "d"], [["a", "c", "d", "e"]]))
        assert rouge_l(c) == pytest.approx(0.75, abs=1e-12)

    def test_matches_oracle(self):
        rng = np.random.default_rng(33)
        for _ in range(30):
            entries = random_corpus(rng, int(rng.integers(1, 6)))
            got = rouge_l(corpus_of(*entries))
            assert got == pytest.approx(rouge_l_oracle(entries), abs=1e-12)


class TestMeteorExact:
    def test_identical_three_tokens(self):
        # matches = 3, chunks = 1: score = 1 - 0.5 / 27
        c = corpus_of((["a", "b", "c"], [["a", "b", "c"]]))
        assert meteor_exact(c) == pytest.approx(1 - 0.5 / 27, abs=1e-12)

    def test_reversed_pair_is_half(self):
        # two matches in two chunks: F = 1, penalty = 0.5
        c = corpus_of((["b", "a"], [["a", "b"]]))
        assert meteor_exact(c) == pytest.approx(0.5, abs=1e-15)

    def test_disjoint_is_zero(self):
        assert meteor_exact(corpus_of((["a"], [["b"]]))) == 0.0

    def test_matches_oracle(self):
        rng = np.random.default_rng(34)
        for _ in range(30):
            entries = random_corpus(rng, int(rng.integers(1, 6)))
            got = meteor_exact(corpus_of(*entries))
            assert got == pytest.approx(meteor_exact_oracle(entries), abs=1e-12)


class TestCider:
    def test_no_overlap_is_zero(self):
        c = corpus_of((["a", "b"], [["c", "d"]]), (["e"], [["f", "g"]]))
        assert cider(c) == 0.0

    def test_single_item_degenerates_to_zero_with_warning(self):
        c = corpus_of((["a", "b"], [["a", "b"]]))
        with pytest.warns(UserWarning, match="single-item"):
            assert cider(c) == 0.0

    def test_perfect_distinct_corpus_scores_ten(self):
        # every sentence has a unique token, so every order has a nonzero
        # tf-idf vector and each cosine is exactly 1
        entries = [
            (["u1", "go", "left", "now"], [["u1", "go", "left", "now"]]),
            (["u2", "go", "right", "now"], [["u2", "go", "right", "now"]]),
            (["u3", "stop", "here", "now"], [["u3", "stop", "here", "now"]]),
            (["u4", "turn", "back", "now"], [["u4", "turn", "back", "now"]]),
        ]
        assert cider(corpus_of(*entries)) == pytest.approx(10.0, abs=1e-12)

    def test_matches_oracle(self):
        rng = np.random.default_rng(35)
        for _ in range(30):
            entries = random_corpus(rng, int(rng.integers(2, 7)))
            got = cider(corpus_of(*entries))
            assert got == pytest.approx(cider_oracle(entries), abs=1e-12)

    def test_length_penalty_shrinks_score(self):
        short = corpus_of((["a", "b", "c"], [["a", "b", "c"]]),
                          (["x", "y"], [["x", "z"]]))
        long_cand = corpus_of((["a", "b", "c"] + ["q"] * 9, [["a", "b", "c"]]),
                              (["x", "y"], [["x", "z"]]))
        assert cider(long_cand) < cider(short)


class TestReportAndCorpus:
    def test_report_rows_and_label(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = evaluate(corpus_of(*PERFECT))
        text = report.to_text()
        for name in ("Bleu_1", "Bleu_4", "METEOR_exact", "ROUGE_L", "CIDEr"):
            assert name in text
        assert "exact unigram matching" in text
        assert report.bleu_1 == 1.0 and report.rouge_l == 1.0
        assert 0.0 <= report.meteor_exact <= 1.0
        assert 0.0 <= report.cider <= 10.0

    def test_empty_corpus_rejected(self):
        with pytest.raises(DataError):
            Corpus(())

    def test_item_without_references_rejected(self):
        with pytest.raises(DataError):
            make_corpus([("v", ["a"], [])])

    def test_lowercasing(self):
        c = make_corpus([("v", ["Grasp"], [["grasp"]])])
        assert c.items[0].candidate == ("grasp",)

    def test_metrics_item_order_invariant(self):
        rng = np.random.default_rng(36)
        entries = random_corpus(rng, 5)
        fwd, rev = corpus_of(*entries), corpus_of(*entries[::-1])
        assert rouge_l(fwd) == pytest.approx(rouge_l(rev), abs=1e-12)
        assert meteor_exact(fwd) == pytest.approx(meteor_exact(rev), abs=1e-12)
        assert cider(fwd) == pytest.approx(cider(rev), abs=1e-12)
