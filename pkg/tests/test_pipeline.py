import numpy as np
import numpy.testing as npt
import pytest

from blade.data import LabeledInstance, build_vocab
from blade.embeddings import load_embeddings, stub_export
from blade.model import forward
from blade.pipeline import prepare_corpus, predict_corpus, predict_instance

from conftest import random_instances, random_model


def corpus_with_fragments():
    return [
        LabeledInstance(
            id="a", tokens=["x", "y"], sentence_label=1,
            token_labels=[1, 0], wordpiece_counts=[2, 1],
        ),
        LabeledInstance(id="b", tokens=["z"], sentence_label=0),
    ]


class TestPrepare:
    def test_fragment_labels_repeat_word_label(self):
        corpus = corpus_with_fragments()
        vocab = build_vocab(corpus, 8)
        prep = prepare_corpus(corpus, vocab, 1)[0]
        npt.assert_array_equal(prep.word_labels, [1, 0])
        npt.assert_array_equal(prep.fragment_labels, [1, 1, 0])

    def test_embedding_rows_attached_in_corpus_order(self, tmp_path):
        corpus = corpus_with_fragments()
        vocab = build_vocab(corpus, 8)
        path = tmp_path / "e.blem"
        stub_export(corpus, 4, path)
        prepared = prepare_corpus(
            corpus, vocab, 1, embeddings=load_embeddings(path)
        )
        assert prepared[0].external_rows.shape == (3, 4)
        assert prepared[1].external_rows.shape == (1, 4)

    def test_embedding_count_mismatch(self, tmp_path):
        corpus = corpus_with_fragments()
        vocab = build_vocab(corpus, 8)
        path = tmp_path / "e.blem"
        stub_export(corpus[:1], 4, path)
        with pytest.raises(ValueError, match="sentences"):
            prepare_corpus(corpus, vocab, 1, embeddings=load_embeddings(path))

    def test_fragment_count_misalignment(self, tmp_path):
        corpus = corpus_with_fragments()
        vocab = build_vocab(corpus, 8)
        path = tmp_path / "e.blem"
        stub_export(corpus, 4, path)
        corpus[0].wordpiece_counts = [1, 2]  # disagrees with the file
        with pytest.raises(ValueError, match="fragment counts"):
            prepare_corpus(corpus, vocab, 1, embeddings=load_embeddings(path))

    def test_truncation_trims_labels(self):
        inst = LabeledInstance(
            id="t", tokens=["a", "b", "c"], sentence_label=1,
            token_labels=[0, 1, 1], wordpiece_counts=[1, 2, 1],
        )
        vocab = build_vocab([inst], 8)
        prep = prepare_corpus([inst], vocab, 1, max_wordpieces=3)[0]
        npt.assert_array_equal(prep.word_labels, [0, 1])
        npt.assert_array_equal(prep.fragment_labels, [0, 1, 1])


class TestPredict:
    def test_external_rows_change_predictions(self, tmp_path):
        rng = np.random.default_rng(3)
        corpus = random_instances(rng, 4, with_token_labels=False)
        vocab = build_vocab(corpus, 12)
        model = random_model(rng, len(vocab), filter_counts={1: 3},
                             external_dim=4)
        path = tmp_path / "e.blem"
        stub_export(corpus, 4, path)
        prepared = prepare_corpus(
            corpus, vocab, 1, embeddings=load_embeddings(path)
        )
        with_rows = [
            forward(model, p.indexed, p.external_rows).logits for p in prepared
        ]
        zeroed = [
            forward(model, p.indexed, np.zeros_like(p.external_rows)).logits
            for p in prepared
        ]
        assert any(
            not np.allclose(a, b) for a, b in zip(with_rows, zeroed)
        )

    def test_padded_external_rows_accepted(self):
        rng = np.random.default_rng(4)
        corpus = random_instances(rng, 1, min_len=2, max_len=2,
                                  with_token_labels=False)
        vocab = build_vocab(corpus, 8)
        model = random_model(rng, len(vocab), filter_counts={3: 2},
                             external_dim=2)
        prep = prepare_corpus(corpus, vocab, min_length=3)[0]
        rows_real = rng.normal(0, 1, (2, 2))
        rows_padded = np.zeros((3, 2))
        rows_padded[:2] = rows_real
        a = forward(model, prep.indexed, rows_real)
        b = forward(model, prep.indexed, rows_padded)
        npt.assert_array_equal(a.logits, b.logits)

    def test_prediction_bundle(self):
        rng = np.random.default_rng(5)
        corpus = random_instances(rng, 3)
        vocab = build_vocab(corpus, 12)
        model = random_model(rng, len(vocab), filter_counts={1: 2})
        prepared = prepare_corpus(corpus, vocab, 1)
        preds = predict_corpus(model, prepared)
        assert [p.instance_id for p in preds] == [c.id for c in corpus]
        for prep, pred in zip(prepared, preds):
            assert pred.word_labels.shape[0] == len(prep.instance.tokens)
            again = predict_instance(model, prep)
            npt.assert_array_equal(again.word_labels, pred.word_labels)
            assert again.sentence_pred == pred.sentence_pred
