import json

import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizer

torch.set_num_threads(1)

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "the", "cat", "dog", "sat", "on", "mat", "ran", "big", "small",
    "play", "jump", "un", "red",
    "##ing", "##s", "##believ", "##able", "##ed",
]

WORDS = [
    "the", "cat", "dog", "sat", "on", "mat", "ran", "big", "small",
    "playing", "plays", "jumping", "unbelievable", "red", "@@@",
]


def _make_tokenizer():
    vocab = {tok: i for i, tok in enumerate(VOCAB)}
    try:
        return BertTokenizer(vocab=vocab, do_lower_case=True)
    except TypeError:  # older constructors take a vocab file path
        import tempfile, os

        path = os.path.join(tempfile.mkdtemp(), "vocab.txt")
        with open(path, "w") as fh:
            fh.write("\n".join(VOCAB) + "\n")
        return BertTokenizer(vocab_file=path, do_lower_case=True)


@pytest.fixture(scope="session")
def encoder_dir(tmp_path_factory):
    """A tiny randomly initialized WordPiece encoder saved locally."""
    root = tmp_path_factory.mktemp("encoder")
    _make_tokenizer().save_pretrained(root)
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=8,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=16,
        max_position_embeddings=64,
    )
    BertModel(config).save_pretrained(root)
    return str(root)


@pytest.fixture(scope="session")
def sample_corpus_path(tmp_path_factory):
    """100 sentences mixing whole-vocab words, splitting words, and OOV."""
    import random

    rng = random.Random(7)
    path = tmp_path_factory.mktemp("corpus") / "sample.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(100):
            n = rng.randint(2, 9)
            tokens = [rng.choice(WORDS) for _ in range(n)]
            fh.write(json.dumps({
                "id": f"s{i}", "tokens": tokens, "sentence_label": i % 2,
            }) + "\n")
    return str(path)
