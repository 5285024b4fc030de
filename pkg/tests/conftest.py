import pytest

from blade.data import LabeledInstance, build_vocab
from blade.model import create_model
from blade.pipeline import prepare_corpus
from blade.toydata import make_trigger_corpus
from blade.train import TrainConfig, train


def tiny_corpus():
    return [
        LabeledInstance(id="a", tokens=["the", "cat", "sat"], sentence_label=0,
                        token_labels=[0, 0, 0]),
        LabeledInstance(id="b", tokens=["the", "dog", "barked", "loudly"],
                        sentence_label=1, token_labels=[0, 0, 1, 1]),
        LabeledInstance(id="c", tokens=["cat", "dog"], sentence_label=1,
                        token_labels=[1, 0]),
    ]


def random_instances(rng, count, vocab_words=8, min_len=3, max_len=6,
                     with_token_labels=True):
    out = []
    for i in range(count):
        n = int(rng.integers(min_len, max_len + 1))
        tokens = [f"t{int(j)}" for j in rng.integers(0, vocab_words, n)]
        labels = [int(v) for v in rng.integers(0, 2, n)] if with_token_labels else None
        out.append(
            LabeledInstance(
                id=f"r{i}",
                tokens=tokens,
                sentence_label=int(rng.integers(0, 2)),
                token_labels=labels,
            )
        )
    return out


def random_model(rng, vocab_size, word_dim=3, filter_counts=None, external_dim=0):
    """Random small model with non-trivial biases everywhere."""
    model = create_model(
        vocab_size=vocab_size,
        word_dim=word_dim,
        filter_counts=filter_counts or {1: 2, 2: 1},
        external_dim=external_dim,
        seed=int(rng.integers(0, 2**31)),
    )
    for g in model.groups:
        g.bias[:] = rng.normal(0.0, 0.3, g.bias.shape)
    model.linear_b[:] = rng.normal(0.0, 0.3, 2)
    return model


@pytest.fixture(scope="session")
def trigger_task():
    """One trained detector shared by the exemplar, reranker, and
    acceptance suites: sentence-level supervision only."""
    full = make_trigger_corpus(2000, seed=11)
    corpus = {"train": full[:1400], "dev": full[1400:1700], "test": full[1700:]}
    vocab = build_vocab(corpus["train"], 250)
    prepared = {
        name: prepare_corpus(part, vocab, min_length=1)
        for name, part in corpus.items()
    }
    model = create_model(len(vocab), word_dim=32, filter_counts={1: 50}, seed=1)
    config = TrainConfig(
        loss="sentence-ce",
        batch_size=50,
        max_epochs=20,
        dropout=0.5,
        dev_metric="sentence-f1",
        seed=3,
    )
    result = train(model, prepared["train"], prepared["dev"], config)
    return {
        "corpus": corpus,
        "vocab": vocab,
        "prepared": prepared,
        "model": result.model,
        "train_result": result,
    }
