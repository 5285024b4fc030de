import numpy as np
import pytest

from blade.features import (
    NEGATIVE,
    POSITIVE,
    ScoredInstance,
    ngram_scores,
    report,
    sentence_scores,
)


def scored(tokens, neg_contrib, pos_contrib=None, gold=0, predicted=0, iid="s0"):
    neg = np.asarray(neg_contrib, dtype=np.float64)
    pos = (
        np.asarray(pos_contrib, dtype=np.float64)
        if pos_contrib is not None
        else -neg
    )
    return ScoredInstance(
        instance_id=iid,
        tokens=list(tokens),
        contributions={NEGATIVE: neg, POSITIVE: pos},
        gold=gold,
        predicted=predicted,
    )


class TestNgramScores:
    def test_window_sums(self):
        # bias-corrected contributions [2, 0, 1]
        inst = scored(["x", "y", "z"], [2.0, 0.0, 1.0])
        out = ngram_scores([inst], NEGATIVE, z=2, restrict_to_predicted=False)
        by_text = {s.text: s.total for s in out}
        assert by_text == {"x y": 2.0, "y z": 1.0}

    def test_full_sentence_window(self):
        inst = scored(["x", "y", "z"], [2.0, 0.0, 1.0])
        out = ngram_scores([inst], NEGATIVE, z=3, restrict_to_predicted=False)
        assert len(out) == 1
        assert out[0].total == 3.0

    def test_total_and_mean_accumulate(self):
        a = scored(["not", "good"], [2.0, 0.0], iid="a")
        b = scored(["not", "good"], [4.0, 0.0], iid="b")
        out = ngram_scores([a, b], NEGATIVE, z=2, restrict_to_predicted=False)
        item = out[0]
        assert item.text == "not good"
        assert item.total == 6.0
        assert item.count == 2
        assert item.mean == 3.0

    def test_restriction_drops_other_predictions(self):
        inst = scored(["x", "y"], [5.0, 5.0], predicted=POSITIVE)
        assert ngram_scores([inst], NEGATIVE, z=1) == []
        assert len(ngram_scores([inst], POSITIVE, z=1)) == 2

    def test_rank_descending_then_lexicographic(self):
        a = scored(["b", "a"], [1.0, 1.0])
        out = ngram_scores([a], NEGATIVE, z=1, restrict_to_predicted=False)
        assert [s.text for s in out] == ["a", "b"]  # equal scores, text order

    def test_mean_vs_total_rank_agree_with_equal_counts(self):
        rng = np.random.default_rng(0)
        insts = [
            scored([f"w{i}", f"v{i}"], rng.normal(0, 1, 2), iid=str(i))
            for i in range(10)
        ]
        total = ngram_scores(insts, NEGATIVE, 2, "total", False)
        mean = ngram_scores(insts, NEGATIVE, 2, "mean", False)
        assert [s.text for s in total] == [s.text for s in mean]

    def test_windows_stay_within_instance(self):
        a = scored(["x"], [1.0], iid="a")
        b = scored(["y"], [1.0], iid="b")
        out = ngram_scores([a, b], NEGATIVE, z=2, restrict_to_predicted=False)
        assert out == []

    def test_invalid_z(self):
        with pytest.raises(ValueError):
            ngram_scores([], NEGATIVE, z=0)

    def test_mean_times_count_is_total(self):
        rng = np.random.default_rng(1)
        insts = [
            scored(["p", "q", "p", "q"], rng.normal(0, 2, 4), iid=str(i))
            for i in range(5)
        ]
        for item in ngram_scores(insts, NEGATIVE, 2, "mean", False):
            assert item.mean * item.count == pytest.approx(item.total, abs=1e-9)


class TestSentenceScores:
    def test_single_word(self):
        inst = scored(["w"], [5.0])
        out = sentence_scores([inst], NEGATIVE)
        assert out[0].score == 5.0
        assert out[0].normalized == 5.0

    def test_bias_cancellation(self):
        inst = scored(["a", "b"], [0.0, 0.0])
        assert sentence_scores([inst], NEGATIVE)[0].score == 0.0

    def test_normalization(self):
        inst = scored(["a", "b", "c", "d"], [1.0, 2.0, 3.0, 4.0])
        out = sentence_scores([inst], NEGATIVE)[0]
        assert out.score == 10.0
        assert out.normalized == 2.5

    def test_telescoping_equals_unigram_sum(self):
        rng = np.random.default_rng(2)
        inst = scored(list("abcdef"), rng.normal(0, 1, 6), predicted=NEGATIVE)
        unigrams = ngram_scores([inst], NEGATIVE, 1, restrict_to_predicted=False)
        assert sentence_scores([inst], NEGATIVE)[0].score == pytest.approx(
            sum(u.total for u in unigrams)
        )

    def test_empty_instance_raises(self):
        inst = scored([], [])
        with pytest.raises(ValueError):
            sentence_scores([inst], NEGATIVE)

    def test_carries_labels(self):
        inst = scored(["a"], [1.0], gold=1, predicted=0)
        out = sentence_scores([inst], NEGATIVE)[0]
        assert out.gold == 1 and out.predicted == 0


class TestReport:
    def _insts(self):
        rng = np.random.default_rng(3)
        return [
            scored(
                [f"w{j}" for j in rng.integers(0, 6, 4)],
                rng.normal(0, 1, 4),
                gold=int(rng.integers(0, 2)),
                predicted=int(rng.integers(0, 2)),
                iid=f"i{k}",
            )
            for k in range(8)
        ]

    def test_deterministic(self):
        insts = self._insts()
        a_text, a_rows = report(insts, zs=(1, 2), top_k=3)
        b_text, b_rows = report(insts, zs=(1, 2), top_k=3)
        assert a_text == b_text
        assert a_rows == b_rows

    def test_topk_larger_than_available(self):
        insts = self._insts()[:1]
        text, _ = report(insts, zs=(1,), top_k=500)
        assert "..." not in text

    def test_empty_scores(self):
        text, rows = report([], zs=(1,), top_k=5)
        assert rows == []
        assert "class negative" in text

    def test_bad_topk(self):
        with pytest.raises(ValueError):
            report([], top_k=0)

    def test_rows_schema(self):
        _, rows = report(self._insts(), zs=(1,), top_k=2)
        for row in rows:
            assert set(row) == {"ngram", "class", "z", "total", "count", "mean"}
