import numpy as np
import pytest

from blade.metrics import accuracy, baselines, fbeta, prf, prf_from_counts, tune_offset


class TestFBeta:
    def test_published_f1(self):
        assert fbeta(47.67, 36.70, 1.0) == pytest.approx(41.47, abs=0.02)

    def test_published_f05(self):
        assert fbeta(47.67, 36.70, 0.5) == pytest.approx(44.98, abs=0.02)

    def test_published_f05_second_row(self):
        assert fbeta(65.53, 28.61, 0.5) == pytest.approx(52.07, abs=0.02)

    def test_degenerate(self):
        assert fbeta(0.0, 0.0, 1.0) == 0.0

    def test_between_min_and_max(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            p, r = rng.uniform(0.1, 100, 2)
            for beta in (0.25, 0.5, 1.0, 2.0):
                f = fbeta(p, r, beta)
                assert min(p, r) - 1e-9 <= f <= max(p, r) + 1e-9

    def test_small_beta_approaches_precision(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            tp, fp, fn = [int(x) for x in rng.integers(1, 50, 3)]
            out = prf_from_counts(tp, fp, fn, beta=0.01)
            assert abs(out.fscore - out.precision) < 0.5


class TestPRF:
    def test_perfect(self):
        out = prf([1, 0, 1], [1, 0, 1])
        assert (out.precision, out.recall, out.fscore) == (100.0, 100.0, 100.0)

    def test_counts(self):
        out = prf([1, 1, 0, 0], [1, 0, 1, 0])
        assert (out.tp, out.fp, out.fn, out.tn) == (1, 1, 1, 1)
        assert out.precision == 50.0 and out.recall == 50.0

    def test_nested_sequences(self):
        out = prf([[1, 0], [1]], [[1, 0], [0]])
        assert out.tp == 1 and out.fp == 1

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            prf([1, 0], [1])

    def test_no_predicted_positives(self):
        out = prf([0, 0], [1, 0])
        assert out.precision == 0.0 and out.fscore == 0.0


class TestBaselines:
    def _gold(self, positive_fraction, n_tokens=5000, sentence_majority=1):
        rng = np.random.default_rng(7)
        token_gold, sent_gold = [], []
        while sum(len(t) for t in token_gold) < n_tokens:
            length = int(rng.integers(5, 15))
            labels = (rng.random(length) < positive_fraction).astype(int)
            token_gold.append(labels.tolist())
            sent_gold.append(sentence_majority)
        return sent_gold, token_gold

    def test_majority_on_sparse_positive_tokens(self):
        # mostly-positive sentences, 15.2% positive tokens
        sent_gold, token_gold = self._gold(0.152)
        report = baselines(sent_gold, token_gold, seed=0)
        assert report.majority_class == 1
        out = report.majority_token
        assert out.recall == 100.0
        assert out.precision == pytest.approx(15.2, abs=1.5)
        expected_f1 = 2 * out.precision * 100 / (out.precision + 100)
        assert out.fscore == pytest.approx(expected_f1, abs=0.05)

    def test_majority_all_positive(self):
        report = baselines([1, 1, 1], [[1], [1, 1], [1]], seed=0)
        assert report.majority_token.precision == 100.0
        assert report.majority_token.recall == 100.0

    def test_majority_negative_corpus(self):
        report = baselines([0, 0, 1], [[0], [0], [1]], seed=0)
        assert report.majority_class == 0
        assert report.majority_token.recall == 0.0

    def test_random_deterministic(self):
        sent_gold, token_gold = self._gold(0.3)
        a = baselines(sent_gold, token_gold, seed=5)
        b = baselines(sent_gold, token_gold, seed=5)
        assert a.random_token == b.random_token
        assert a.random_sentence == b.random_sentence

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            baselines([], [], seed=0)


class TestAccuracy:
    def test_basic(self):
        assert accuracy([1, 0, 1, 1], [1, 0, 0, 1]) == 75.0

    def test_empty(self):
        with pytest.raises(ValueError):
            accuracy([], [])


class TestTuneOffset:
    def test_degenerate_grid_is_default(self):
        scores = [[0.5, -0.5]]
        gold = [[1, 0]]
        delta = tune_offset(scores, gold, grid_points=1)
        # single quantile plus 0; perfect separation at 0 already
        assert delta == 0.0

    def test_separable_case_prefers_near_zero(self):
        rng = np.random.default_rng(3)
        pos = rng.uniform(2.1, 5.0, 40)
        neg = rng.uniform(-3.0, 0.9, 60)
        scores = [np.concatenate([pos, neg])]
        gold = [np.concatenate([np.ones(40, int), np.zeros(60, int)])]
        delta = tune_offset(scores, gold)
        flat = scores[0]
        perfect = [
            d for d in np.unique(np.concatenate([np.quantile(flat, np.linspace(0, 1, 1001)), [0.0]]))
            if np.all(pos > d) and np.all(neg <= d)
        ]
        assert delta == min(perfect, key=lambda d: (abs(d), d))
        pred = (flat > delta).astype(int)
        from blade.metrics import prf as _prf

        assert _prf(pred, gold[0], 0.5).fscore == 100.0

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        scores = [rng.normal(0, 1, 50)]
        gold = [rng.integers(0, 2, 50)]
        assert tune_offset(scores, gold) == tune_offset(scores, gold)

    def test_monotone_positive_count(self):
        rng = np.random.default_rng(5)
        flat = rng.normal(0, 1, 200)
        counts = [
            int(np.sum(flat > d)) for d in np.linspace(-2, 2, 40)
        ]
        assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            tune_offset([], [])
