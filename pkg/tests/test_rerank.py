import pytest

from blade.data import LabeledInstance, build_vocab
from blade.pipeline import prepare_corpus
from blade.rerank import group_candidates, rerank, rerank_eval
from blade.toydata import make_candidate_groups


def candidate(iid, tokens, gid="g0", original_len=3, labels=None):
    return LabeledInstance(
        id=iid, tokens=tokens, sentence_label=0,
        token_labels=labels or [0] * len(tokens),
        group_id=gid, original_len=original_len,
    )


class TestGrouping:
    def test_duplicates_dropped(self):
        corpus = [
            candidate("a", ["x", "y"]),
            candidate("b", ["x", "y"]),
            candidate("c", ["x", "z"]),
        ]
        vocab = build_vocab(corpus, 8)
        groups = group_candidates(prepare_corpus(corpus, vocab, 1))
        assert len(groups) == 1
        assert [p.instance.id for p in groups[0].candidates] == ["a", "c"]

    def test_missing_group_fields(self):
        corpus = [LabeledInstance(id="a", tokens=["x"], sentence_label=0)]
        vocab = build_vocab(corpus, 4)
        with pytest.raises(ValueError, match="group_id"):
            group_candidates(prepare_corpus(corpus, vocab, 1))

    def test_group_order_preserved(self):
        corpus = [
            candidate("a", ["x"], gid="g1"),
            candidate("b", ["y"], gid="g0"),
            candidate("c", ["z"], gid="g1"),
        ]
        vocab = build_vocab(corpus, 8)
        groups = group_candidates(prepare_corpus(corpus, vocab, 1))
        assert [g.group_id for g in groups] == ["g1", "g0"]


class TestRerank:
    def _detector(self, trigger_task):
        return trigger_task["model"], trigger_task["vocab"]

    def test_minimum_detection_count_always_chosen(self, trigger_task):
        model, vocab = self._detector(trigger_task)
        corpus = make_candidate_groups(10, 20, seed=50)
        groups = group_candidates(prepare_corpus(corpus, vocab, 1))
        selections = rerank(model, groups, seed=1)
        for group, sel in zip(groups, selections):
            ids = [p.instance.id for p in group.candidates]
            assert sel.chosen_id in ids
            assert sel.detections == sel.pool_min

    def test_deterministic(self, trigger_task):
        model, vocab = self._detector(trigger_task)
        corpus = make_candidate_groups(6, 12, seed=51)
        groups = group_candidates(prepare_corpus(corpus, vocab, 1))
        a = [(s.chosen_id, s.detections) for s in rerank(model, groups, seed=9)]
        b = [(s.chosen_id, s.detections) for s in rerank(model, groups, seed=9)]
        assert a == b

    def test_seed_changes_tie_choice(self, trigger_task):
        model, vocab = self._detector(trigger_task)
        # many identical-length zero-detection candidates -> choice is the
        # seeded tie-break
        corpus = [
            candidate(f"c{i}", [f"w{j:03d}" for j in range(i, i + 3)],
                      original_len=3)
            for i in range(30)
        ]
        vocab_local = trigger_task["vocab"]
        groups = group_candidates(prepare_corpus(corpus, vocab_local, 1))
        picks = {rerank(model, groups, seed=s)[0].chosen_id for s in range(8)}
        assert len(picks) > 1

    def test_count_dominates_length(self, trigger_task):
        model, vocab = self._detector(trigger_task)
        # candidate 1: no triggers but far from original length;
        # candidate 2: short but contains triggers
        clean = candidate("long", [f"w{j:03d}" for j in range(50)], original_len=10)
        dirty = candidate(
            "short", ["trig0", "w001"] + ["w002"] * 8, original_len=10,
            labels=[1, 0] + [0] * 8,
        )
        groups = group_candidates(prepare_corpus([clean, dirty], vocab, 1))
        sel = rerank(model, groups, seed=0)[0]
        assert sel.chosen_id == "long"

    def test_min_set_then_length_gap(self, trigger_task):
        # counts [3,1,1] with lengths [10,9,11] against original length 10:
        # the two single-detection candidates tie on |length - original| = 1
        model, vocab = self._detector(trigger_task)
        fill = lambda n: [f"w{j:03d}" for j in range(n)]
        c1 = candidate("three", ["trig0", "trig1", "trig2"] + fill(7),
                       original_len=10, labels=[1, 1, 1] + [0] * 7)
        c2 = candidate("one-short", ["trig3"] + fill(8), original_len=10,
                       labels=[1] + [0] * 8)
        c3 = candidate("one-long", ["trig4"] + fill(10), original_len=10,
                       labels=[1] + [0] * 10)
        groups = group_candidates(prepare_corpus([c1, c2, c3], vocab, 1))
        picks = {rerank(model, groups, seed=s)[0].chosen_id for s in range(12)}
        assert "three" not in picks
        assert picks <= {"one-short", "one-long"}
        assert len(picks) == 2  # the seeded coin visits both finalists

    def test_length_tiebreak(self, trigger_task):
        model, vocab = self._detector(trigger_task)
        near = candidate("near", ["w001"] * 9, original_len=10)
        far = candidate("far", ["w001"] * 3, original_len=10)
        groups = group_candidates(prepare_corpus([near, far], vocab, 1))
        sel = rerank(model, groups, seed=0)[0]
        assert sel.chosen_id == "near"

    def test_single_candidate(self, trigger_task):
        model, vocab = self._detector(trigger_task)
        only = candidate("only", ["trig0", "trig1"], labels=[1, 1])
        groups = group_candidates(prepare_corpus([only], vocab, 1))
        sel = rerank(model, groups, seed=0)[0]
        assert sel.chosen_id == "only"

    def test_empty_group_raises(self, trigger_task):
        model, _ = self._detector(trigger_task)
        from blade.rerank import CandidateGroup

        with pytest.raises(ValueError):
            rerank(model, [CandidateGroup("g", 3, [])], seed=0)

    def test_monotone_pool_growth(self, trigger_task):
        model, vocab = self._detector(trigger_task)
        corpus = make_candidate_groups(1, 30, seed=52)
        small = group_candidates(prepare_corpus(corpus[:10], vocab, 1))
        large = group_candidates(prepare_corpus(corpus, vocab, 1))
        d_small = rerank(model, small, seed=0)[0].detections
        d_large = rerank(model, large, seed=0)[0].detections
        assert d_large <= d_small


class TestRerankEval:
    def test_zero_detections_convention(self, trigger_task):
        model = trigger_task["model"]
        vocab = trigger_task["vocab"]
        corpus = [candidate("a", ["w001", "w002"], original_len=2)]
        groups = group_candidates(prepare_corpus(corpus, vocab, 1))
        selections = rerank(model, groups, seed=0)
        out = rerank_eval(selections)
        assert out.mean_detections == 0.0
        assert out.prf.precision == 0.0
        assert out.prf.recall == 0.0

    def test_requires_gold(self, trigger_task):
        model = trigger_task["model"]
        vocab = trigger_task["vocab"]
        inst = LabeledInstance(
            id="a", tokens=["w001"], sentence_label=0,
            group_id="g", original_len=1,
        )
        groups = group_candidates(prepare_corpus([inst], vocab, 1))
        selections = rerank(model, groups, seed=0)
        with pytest.raises(ValueError, match="gold"):
            rerank_eval(selections)
