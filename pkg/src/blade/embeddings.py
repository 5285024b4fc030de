"""Frozen per-fragment embedding files.

Contextual input vectors are consumed from a binary file produced by an
external exporter, one block of 32-bit float rows per sentence together
with the word-to-fragment alignment. A deterministic hash-based stub
exporter lives here as well, so everything downstream can be exercised
without any pretrained encoder.

File layout (all little-endian):
  magic "BLEM" | version u32 | embed dim E u32 | sentence count u64
  per sentence: index u64 | fragment total P u32 | word count W u32 |
                W fragment counts u32 (summing to P) | P*E float32 rows
A sidecar ``<path>.ids`` maps sentence index to instance id, one
``index<TAB>id`` line per sentence.
"""

from __future__ import annotations

import hashlib
import os
import struct

import numpy as np

from .data import LabeledInstance

EMBEDDING_MAGIC = b"BLEM"
EMBEDDING_VERSION = 1


class EmbeddingFormatError(ValueError):
    """Raised when an embedding file violates the declared layout."""


class EmbeddingSet:
    """In-memory view of one embedding file."""

    def __init__(self, dim: int, sentences: list[tuple[np.ndarray, list[int]]],
                 ids: list[str] | None = None):
        self.dim = dim
        self._sentences = sentences
        self.ids = ids

    def __len__(self) -> int:
        return len(self._sentences)

    def rows(self, i: int) -> np.ndarray:
        """Float32 rows of sentence i, shape (P, dim)."""
        return self._sentences[i][0]

    def fragment_counts(self, i: int) -> list[int]:
        return list(self._sentences[i][1])


def write_embeddings(
    path,
    dim: int,
    sentences: list[tuple[np.ndarray, list[int]]],
    ids: list[str] | None = None,
) -> None:
    """Write sentence blocks in file order, then atomically rename."""
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(EMBEDDING_MAGIC)
        fh.write(struct.pack("<I", EMBEDDING_VERSION))
        fh.write(struct.pack("<I", dim))
        fh.write(struct.pack("<Q", len(sentences)))
        for i, (rows, counts) in enumerate(sentences):
            rows = np.ascontiguousarray(rows, dtype="<f4")
            if rows.ndim != 2 or rows.shape[1] != dim:
                raise EmbeddingFormatError(
                    f"sentence {i}: rows shape {rows.shape} does not match dim {dim}"
                )
            if sum(counts) != rows.shape[0]:
                raise EmbeddingFormatError(
                    f"sentence {i}: fragment counts sum to {sum(counts)} "
                    f"but there are {rows.shape[0]} rows"
                )
            fh.write(struct.pack("<Q", i))
            fh.write(struct.pack("<I", rows.shape[0]))
            fh.write(struct.pack("<I", len(counts)))
            fh.write(np.asarray(counts, dtype="<u4").tobytes())
            fh.write(rows.tobytes())
    os.replace(tmp, path)
    if ids is not None:
        tmp = str(path) + ".ids.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            for i, iid in enumerate(ids):
                fh.write(f"{i}\t{iid}\n")
        os.replace(tmp, str(path) + ".ids")


def load_embeddings(path) -> EmbeddingSet:
    """Read an embedding file, checking every declared length exactly."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != EMBEDDING_MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic {raw[:4]!r}")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != EMBEDDING_VERSION:
        raise EmbeddingFormatError(f"{path}: unsupported version {version}")
    (dim,) = struct.unpack_from("<I", raw, 8)
    (count,) = struct.unpack_from("<Q", raw, 12)
    off = 20
    sentences: list[tuple[np.ndarray, list[int]]] = []
    for i in range(count):
        if off + 16 > len(raw):
            raise EmbeddingFormatError(f"{path}: truncated header of sentence {i}")
        index, p, w = struct.unpack_from("<QII", raw, off)
        off += 16
        if index != i:
            raise EmbeddingFormatError(
                f"{path}: sentence {i} carries index {index}"
            )
        counts = np.frombuffer(raw, dtype="<u4", count=w, offset=off)
        off += 4 * w
        if int(counts.sum()) != p:
            raise EmbeddingFormatError(
                f"{path}: sentence {i} fragment counts sum to {int(counts.sum())}, "
                f"expected {p}"
            )
        nbytes = 4 * p * dim
        if off + nbytes > len(raw):
            raise EmbeddingFormatError(f"{path}: truncated rows of sentence {i}")
        rows = np.frombuffer(raw, dtype="<f4", count=p * dim, offset=off).reshape(p, dim)
        off += nbytes
        sentences.append((rows.copy(), [int(c) for c in counts]))
    if off != len(raw):
        raise EmbeddingFormatError(
            f"{path}: {len(raw) - off} trailing bytes after declared payload"
        )
    ids = None
    ids_path = str(path) + ".ids"
    if os.path.exists(ids_path):
        ids = []
        with open(ids_path, "r", encoding="utf-8") as fh:
            for line in fh:
                _, _, iid = line.rstrip("\n").partition("\t")
                ids.append(iid)
    return EmbeddingSet(dim=dim, sentences=sentences, ids=ids)


# --- deterministic stub exporter ----------------------------------------------

def _unit_vector(key: str, dim: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "little")
    v = np.random.default_rng(seed).standard_normal(dim)
    return (v / np.linalg.norm(v)).astype(np.float32)


def stub_rows_for_instance(inst: LabeledInstance, dim: int) -> np.ndarray:
    """Pseudo-contextual rows: each fragment hashes its word and neighbors.

    The row for fragment f of word i is
    0.5*u(word_i) + 0.3*u(word_{i-1}) + 0.3*u(word_{i+1}) + 0.05*u(word_i@f),
    with sentence-boundary markers standing in for missing neighbors.
    Context sensitivity here mirrors what a real contextual encoder
    provides: the same surface word embeds differently in different
    company, which is what makes fingerprint matching domain-aware.
    """
    rows = []
    tokens = inst.tokens
    counts = inst.fragment_counts()
    for i, (word, c) in enumerate(zip(tokens, counts)):
        prev_w = tokens[i - 1] if i > 0 else "<s>"
        next_w = tokens[i + 1] if i + 1 < len(tokens) else "</s>"
        base = (
            0.5 * _unit_vector("w\x00" + word, dim)
            + 0.3 * _unit_vector("p\x00" + prev_w, dim)
            + 0.3 * _unit_vector("n\x00" + next_w, dim)
        )
        for f in range(c):
            rows.append(base + 0.05 * _unit_vector(f"f\x00{word}\x00{f}", dim))
    return np.asarray(rows, dtype=np.float32).reshape(len(rows), dim)


def stub_export(corpus: list[LabeledInstance], dim: int, path) -> None:
    """Write hash-based pseudo-embeddings for a corpus, byte-deterministic."""
    sentences = [
        (stub_rows_for_instance(inst, dim), inst.fragment_counts())
        for inst in corpus
    ]
    write_embeddings(path, dim, sentences, ids=[inst.id for inst in corpus])
