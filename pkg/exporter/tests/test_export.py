import struct

import pytest

from blade.embeddings import load_embeddings  # the consumer-side loader
from blade_exporter.cli import main
from blade_exporter.export import (
    ExportError,
    encode_sentence,
    export,
    load_encoder,
    read_corpus,
    tokenize_words,
)


class TestTokenization:
    def test_whole_and_split_words(self, encoder_dir):
        tokenizer, _ = load_encoder(encoder_dir)
        pieces, counts = tokenize_words(tokenizer, ["the", "playing", "unbelievable"])
        assert counts == [1, 2, 3]
        assert pieces == ["the", "play", "##ing", "un", "##believ", "##able"]

    def test_oov_maps_to_unknown_fragments(self, encoder_dir):
        # punctuation runs are pre-split, one unknown piece per character
        tokenizer, _ = load_encoder(encoder_dir)
        pieces, counts = tokenize_words(tokenizer, ["@@@"])
        assert counts == [len(pieces)]
        assert set(pieces) == {tokenizer.unk_token}


class TestEncode:
    def test_dimension_is_layers_times_hidden(self, encoder_dir):
        tokenizer, model = load_encoder(encoder_dir)
        rows, counts = encode_sentence(
            tokenizer, model, ["the", "cat", "sat"], layers=2,
            max_wordpieces=350, instance_id="x",
        )
        assert rows.shape == (3, 16)
        assert counts == [1, 1, 1]

    def test_single_layer_block(self, encoder_dir):
        tokenizer, model = load_encoder(encoder_dir)
        rows, _ = encode_sentence(
            tokenizer, model, ["the", "cat", "sat"], layers=1,
            max_wordpieces=350, instance_id="x",
        )
        assert rows.shape == (3, 8)

    def test_too_many_layers_rejected(self, encoder_dir):
        tokenizer, model = load_encoder(encoder_dir)
        with pytest.raises(ExportError, match="layers"):
            encode_sentence(tokenizer, model, ["the"], layers=5,
                            max_wordpieces=350, instance_id="x")

    def test_truncation_at_word_boundary(self, encoder_dir, caplog):
        tokenizer, model = load_encoder(encoder_dir)
        with caplog.at_level("WARNING"):
            rows, counts = encode_sentence(
                tokenizer, model, ["playing", "unbelievable", "cat"],
                layers=1, max_wordpieces=4, instance_id="long",
            )
        assert counts == [2]  # the 3-fragment word would exceed the budget
        assert rows.shape[0] == 2
        assert "truncating" in caplog.text

    def test_frozen_parameters(self, encoder_dir):
        _, model = load_encoder(encoder_dir)
        assert all(not p.requires_grad for p in model.parameters())


class TestExportFile:
    def test_round_trip_through_core_loader(self, encoder_dir,
                                            sample_corpus_path, tmp_path):
        out = tmp_path / "sample.blem"
        dim = export(sample_corpus_path, encoder_dir, out, layers=2)
        assert dim == 16
        loaded = load_embeddings(out)
        assert loaded.dim == 16
        assert len(loaded) == 100

        tokenizer, model = load_encoder(encoder_dir)
        corpus = read_corpus(sample_corpus_path)
        assert loaded.ids == [obj["id"] for obj in corpus]
        for i, obj in enumerate(corpus):
            rows, counts = encode_sentence(
                tokenizer, model, obj["tokens"], layers=2,
                max_wordpieces=350, instance_id=obj["id"],
            )
            # bit-exact float32 round trip
            assert loaded.rows(i).tobytes() == rows.astype("<f4").tobytes()
            assert loaded.fragment_counts(i) == counts

    def test_alignment_counts_sum_on_sample(self, encoder_dir,
                                            sample_corpus_path, tmp_path):
        out = tmp_path / "sample.blem"
        export(sample_corpus_path, encoder_dir, out, layers=1)
        loaded = load_embeddings(out)
        corpus = read_corpus(sample_corpus_path)
        for i, obj in enumerate(corpus):
            counts = loaded.fragment_counts(i)
            assert len(counts) == len(obj["tokens"])
            assert sum(counts) == loaded.rows(i).shape[0]

    def test_header_payload_length_identity(self, encoder_dir,
                                            sample_corpus_path, tmp_path):
        out = tmp_path / "sample.blem"
        export(sample_corpus_path, encoder_dir, out, layers=2)
        raw = open(out, "rb").read()
        assert raw[:4] == b"BLEM"
        (dim,) = struct.unpack_from("<I", raw, 8)
        (count,) = struct.unpack_from("<Q", raw, 12)
        off = 20
        for _ in range(count):
            _, p, w = struct.unpack_from("<QII", raw, off)
            off += 16 + 4 * w + 4 * p * dim
        assert off == len(raw)

    def test_export_deterministic(self, encoder_dir, sample_corpus_path,
                                  tmp_path):
        a, b = tmp_path / "a.blem", tmp_path / "b.blem"
        export(sample_corpus_path, encoder_dir, a, layers=2)
        export(sample_corpus_path, encoder_dir, b, layers=2)
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_missing_encoder(self, sample_corpus_path, tmp_path):
        with pytest.raises(ExportError, match="locally"):
            export(sample_corpus_path, str(tmp_path / "nope"),
                   tmp_path / "o.blem")

    def test_malformed_corpus(self, encoder_dir, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\n")
        with pytest.raises(ExportError, match="invalid JSON"):
            export(bad, encoder_dir, tmp_path / "o.blem")


class TestCli:
    def test_end_to_end(self, encoder_dir, sample_corpus_path, tmp_path,
                        capsys):
        out = tmp_path / "cli.blem"
        code = main([
            "--input", sample_corpus_path, "--model", encoder_dir,
            "--layers", "1", "--out", str(out),
        ])
        assert code == 0
        assert "dim 8" in capsys.readouterr().out
        loaded = load_embeddings(out)
        assert loaded.dim == 8

    def test_error_exit_code(self, sample_corpus_path, tmp_path, capsys):
        code = main([
            "--input", sample_corpus_path, "--model", str(tmp_path / "none"),
            "--out", str(tmp_path / "o.blem"),
        ])
        assert code == 2
        assert "export error" in capsys.readouterr().err
