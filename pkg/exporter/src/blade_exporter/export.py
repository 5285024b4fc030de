"""Run a frozen masked-LM encoder over a corpus and dump per-fragment rows.

Each corpus word is split by the encoder's subword tokenizer; the top
``layers`` hidden layers are concatenated per fragment and written in
corpus order along with the word-to-fragment alignment. The encoder's
parameters are never updated, so repeated exports are byte-identical.
"""

from __future__ import annotations

import json
import logging
import os

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .format import write_embedding_file

log = logging.getLogger("blade_exporter")

DEFAULT_LAYERS = 4
DEFAULT_MAX_WORDPIECES = 350


class ExportError(ValueError):
    pass


def read_corpus(path) -> list[dict]:
    """Minimal reader for the line-delimited corpus interface."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExportError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if "tokens" not in obj or not isinstance(obj["tokens"], list):
                raise ExportError(f"{path}:{lineno}: missing 'tokens' array")
            obj.setdefault("id", str(lineno - 1))
            out.append(obj)
    return out


def load_encoder(model_path: str):
    if not os.path.isdir(model_path) and not os.path.exists(model_path):
        raise ExportError(
            f"encoder not found at {model_path!r}; a locally available "
            "pretrained model directory is required"
        )
    tokenizer = AutoTokenizer.from_pretrained(model_path)
    model = AutoModel.from_pretrained(model_path)
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return tokenizer, model


def tokenize_words(tokenizer, words: list[str]) -> tuple[list[str], list[int]]:
    """Subword fragments for pre-split words, with per-word counts.

    A word the tokenizer cannot split becomes a single unknown-token
    fragment so the alignment always covers every word.
    """
    pieces: list[str] = []
    counts: list[int] = []
    for word in words:
        frags = tokenizer.tokenize(word)
        if not frags:
            frags = [tokenizer.unk_token]
        pieces.extend(frags)
        counts.append(len(frags))
    return pieces, counts


def truncate_to_budget(
    counts: list[int], max_wordpieces: int, instance_id: str
) -> int:
    """Number of whole words whose fragments fit in the budget."""
    total = 0
    keep = 0
    for c in counts:
        if total + c > max_wordpieces:
            log.warning(
                "instance %s exceeds %d wordpieces; truncating at a word "
                "boundary", instance_id, max_wordpieces,
            )
            break
        total += c
        keep += 1
    if keep == 0:
        raise ExportError(
            f"instance {instance_id!r}: first word alone exceeds the "
            f"{max_wordpieces}-wordpiece budget"
        )
    return keep


@torch.no_grad()
def encode_sentence(
    tokenizer, model, words: list[str], layers: int, max_wordpieces: int,
    instance_id: str,
) -> tuple[np.ndarray, list[int]]:
    pieces, counts = tokenize_words(tokenizer, words)
    keep = truncate_to_budget(counts, max_wordpieces, instance_id)
    counts = counts[:keep]
    pieces = pieces[: sum(counts)]

    ids = tokenizer.convert_tokens_to_ids(pieces)
    ids = [tokenizer.cls_token_id] + ids + [tokenizer.sep_token_id]
    inputs = torch.tensor([ids], dtype=torch.long)
    outputs = model(input_ids=inputs, output_hidden_states=True)
    hidden = outputs.hidden_states
    if layers < 1 or layers > len(hidden) - 1:
        raise ExportError(
            f"requested top {layers} layers but the encoder has "
            f"{len(hidden) - 1}"
        )
    stacked = torch.cat(list(hidden[-layers:]), dim=-1)[0]
    rows = stacked[1 : 1 + sum(counts)]  # drop the added markers
    return rows.to(torch.float32).numpy(), counts


def export(
    corpus_path,
    model_path: str,
    out_path,
    layers: int = DEFAULT_LAYERS,
    max_wordpieces: int = DEFAULT_MAX_WORDPIECES,
) -> int:
    """Export the whole corpus; returns the embedding dimension written."""
    corpus = read_corpus(corpus_path)
    tokenizer, model = load_encoder(model_path)
    hidden_size = model.config.hidden_size
    dim = layers * hidden_size
    sentences = []
    ids = []
    for obj in corpus:
        rows, counts = encode_sentence(
            tokenizer, model, obj["tokens"], layers, max_wordpieces, obj["id"]
        )
        sentences.append((rows, counts))
        ids.append(obj["id"])
    write_embedding_file(out_path, dim, sentences, ids=ids)
    return dim
