"""Convolutional classifier with a per-token contribution decomposition.

A single 1-D convolutional layer (possibly mixing filter widths), ReLU,
maxpool over positions, and a binary linear head. Because each pooled
feature survives from exactly one window, every term of the final matrix
multiply can be credited back to the input positions that produced it,
yielding per-token class contribution scores from a sentence-trained
model, and per-token fingerprint vectors for nearest-neighbor auditing.
"""

from __future__ import annotations

import hashlib
import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .data import IndexedInstance, average_over_fragments

CHECKPOINT_MAGIC = b"BLMD"
CHECKPOINT_VERSION = 1
NUM_CLASSES = 2


class UnsupportedConfigError(ValueError):
    """Raised when an operation requires a model configuration it lacks."""


@dataclass
class FilterGroup:
    """All filters sharing one width: weights (count, width, D), bias (count,)."""

    width: int
    weights: np.ndarray
    bias: np.ndarray

    @property
    def count(self) -> int:
        return int(self.weights.shape[0])


@dataclass
class BladeModel:
    """Trainable parameters of the classifier.

    ``embeddings`` is the word-vector table (padding at row 0, unknown at
    row 1); ``external_dim`` counts frozen per-position input dimensions
    supplied alongside each instance (0 when none are used). ``linear_w``
    is (2, M) over the concatenated filter order, ``linear_b`` is (2,).
    """

    embeddings: np.ndarray
    external_dim: int
    groups: list[FilterGroup]
    linear_w: np.ndarray
    linear_b: np.ndarray

    @property
    def vocab_size(self) -> int:
        return int(self.embeddings.shape[0])

    @property
    def word_dim(self) -> int:
        return int(self.embeddings.shape[1])

    @property
    def input_dim(self) -> int:
        return self.word_dim + self.external_dim

    @property
    def num_filters(self) -> int:
        return sum(g.count for g in self.groups)

    @property
    def widths(self) -> list[int]:
        """Width of every filter, in global filter order."""
        out: list[int] = []
        for g in self.groups:
            out.extend([g.width] * g.count)
        return out

    @property
    def max_width(self) -> int:
        return max(g.width for g in self.groups)

    def is_unit_width(self) -> bool:
        return all(g.width == 1 for g in self.groups)


def create_model(
    vocab_size: int,
    word_dim: int,
    filter_counts: dict[int, int],
    external_dim: int = 0,
    seed: int = 0,
) -> BladeModel:
    """Initialize a model with the given width -> filter-count map.

    Word vectors start uniform in [-0.25, 0.25); filters and the linear
    head use uniform Glorot ranges; biases start at zero.
    """
    if word_dim + external_dim <= 0:
        raise ValueError("model needs at least one input dimension")
    if not filter_counts:
        raise ValueError("at least one filter group is required")
    rng = np.random.default_rng(seed)
    emb = rng.uniform(-0.25, 0.25, size=(vocab_size, word_dim))
    emb[0] = 0.0
    d = word_dim + external_dim
    groups = []
    for width in sorted(filter_counts):
        count = filter_counts[width]
        if width < 1 or count < 1:
            raise ValueError(f"invalid filter group {width}x{count}")
        bound = np.sqrt(6.0 / (width * d + 1.0))
        w = rng.uniform(-bound, bound, size=(count, width, d))
        groups.append(FilterGroup(width=width, weights=w, bias=np.zeros(count)))
    m = sum(g.count for g in groups)
    bound = np.sqrt(6.0 / (m + NUM_CLASSES))
    lw = rng.uniform(-bound, bound, size=(NUM_CLASSES, m))
    return BladeModel(
        embeddings=emb,
        external_dim=external_dim,
        groups=groups,
        linear_w=lw,
        linear_b=np.zeros(NUM_CLASSES),
    )


@dataclass
class ForwardTrace:
    """Everything the forward pass computed for one instance.

    ``feature_maps[i][m, j]`` is the pre-ReLU response of filter m of group
    i at window start j. ``pooled_raw`` is max(ReLU(h)) per filter;
    ``pooled`` is the vector that actually fed the linear head (equal to
    ``pooled_raw`` at inference, dropout-scaled in training mode).
    ``argmax`` holds the first position attaining each filter's max.
    """

    inputs: np.ndarray
    feature_maps: list[np.ndarray]
    pooled_raw: np.ndarray
    pooled: np.ndarray
    argmax: np.ndarray
    dropout_mask: np.ndarray | None
    logits: np.ndarray
    probs: np.ndarray
    indexed: IndexedInstance = field(repr=False)


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


def build_input_matrix(
    model: BladeModel,
    indexed: IndexedInstance,
    external_rows: np.ndarray | None,
) -> np.ndarray:
    """Stack word vectors (and frozen external rows) into an (N, D) matrix."""
    n = indexed.length
    x = np.zeros((n, model.input_dim), dtype=np.float64)
    x[:, : model.word_dim] = model.embeddings[indexed.indices]
    if model.external_dim > 0:
        if external_rows is None:
            raise ValueError("model expects external embedding rows")
        rows = np.asarray(external_rows, dtype=np.float64)
        # either one row per real fragment, or per padded position
        if rows.shape not in ((indexed.real_length, model.external_dim),
                              (n, model.external_dim)):
            raise ValueError(
                f"external rows shape {rows.shape} does not match "
                f"({indexed.real_length}, {model.external_dim})"
            )
        x[: rows.shape[0], model.word_dim :] = rows
    elif external_rows is not None:
        raise ValueError("external rows supplied to a model without external dims")
    return x


def forward(
    model: BladeModel,
    indexed: IndexedInstance,
    external_rows: np.ndarray | None = None,
    mode: str = "infer",
    rng: np.random.Generator | None = None,
    dropout: float = 0.0,
    dropout_mask: np.ndarray | None = None,
) -> ForwardTrace:
    """Run the network over one instance.

    In ``train`` mode a dropout mask over the pooled vector is drawn from
    ``rng`` (or replayed from ``dropout_mask``) and applied with inverted
    scaling before the linear head; ``infer`` mode is deterministic.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"unknown mode {mode!r}")
    n = indexed.length
    if n < model.max_width:
        raise ValueError(
            f"sequence length {n} shorter than widest filter {model.max_width}"
        )
    x = build_input_matrix(model, indexed, external_rows)

    feature_maps: list[np.ndarray] = []
    pooled_raw = np.empty(model.num_filters, dtype=np.float64)
    argmax = np.empty(model.num_filters, dtype=np.int64)
    offset = 0
    for g in model.groups:
        k = g.width
        length = n - k + 1
        h = np.zeros((g.count, length), dtype=np.float64)
        for j in range(k):
            # h[:, t] accumulates weights[:, j, :] . x[t + j]
            h += g.weights[:, j, :] @ x[j : j + length].T
        h += g.bias[:, None]
        feature_maps.append(h)
        relu = np.maximum(h, 0.0)
        idx = relu.argmax(axis=1)
        pooled_raw[offset : offset + g.count] = relu[np.arange(g.count), idx]
        argmax[offset : offset + g.count] = idx
        offset += g.count

    mask = None
    pooled = pooled_raw
    if mode == "train" and dropout > 0.0:
        if dropout_mask is not None:
            mask = np.asarray(dropout_mask, dtype=np.float64)
        else:
            if rng is None:
                raise ValueError("train-mode dropout requires an rng or a mask")
            keep = rng.random(model.num_filters) >= dropout
            mask = keep.astype(np.float64) / (1.0 - dropout)
        pooled = pooled_raw * mask

    logits = model.linear_w @ pooled + model.linear_b
    return ForwardTrace(
        inputs=x,
        feature_maps=feature_maps,
        pooled_raw=pooled_raw,
        pooled=pooled,
        argmax=argmax,
        dropout_mask=mask,
        logits=logits,
        probs=_softmax(logits),
        indexed=indexed,
    )


@dataclass
class TokenDecomposition:
    """Per-position class contribution scores, at fragment and word level.

    ``neg``/``pos`` are the negative- and positive-class scores over all
    input positions (padding included); ``combined`` is their difference.
    Word-level variants are fragment averages over real positions only.
    """

    neg: np.ndarray
    pos: np.ndarray
    combined: np.ndarray
    mask: np.ndarray
    word_neg: np.ndarray
    word_pos: np.ndarray
    word_combined: np.ndarray
    indexed: IndexedInstance = field(repr=False)


def decompose(trace: ForwardTrace, model: BladeModel) -> TokenDecomposition:
    """Credit each pooled term to the positions its surviving window covers.

    Filter m contributes ``linear_w[c, m] * pooled[m]`` to class c's score
    at every position of the window starting at its pooled argmax; the
    class bias is added at every position. The scores telescope back to
    the logits: summing bias-corrected scores over all positions and
    re-adding the bias recovers each logit when all widths are 1.
    """
    if model.linear_w.shape[0] != NUM_CLASSES:
        raise UnsupportedConfigError("decomposition is defined for two classes")
    n = trace.indexed.length
    neg = np.full(n, model.linear_b[0], dtype=np.float64)
    pos = np.full(n, model.linear_b[1], dtype=np.float64)
    offset = 0
    for g in model.groups:
        k = g.width
        starts = trace.argmax[offset : offset + g.count]
        terms_neg = model.linear_w[0, offset : offset + g.count] * trace.pooled[
            offset : offset + g.count
        ]
        terms_pos = model.linear_w[1, offset : offset + g.count] * trace.pooled[
            offset : offset + g.count
        ]
        windows = starts[:, None] + np.arange(k)[None, :]
        np.add.at(neg, windows.ravel(), np.repeat(terms_neg, k))
        np.add.at(pos, windows.ravel(), np.repeat(terms_pos, k))
        offset += g.count
    combined = pos - neg
    spans = trace.indexed.word_spans
    return TokenDecomposition(
        neg=neg,
        pos=pos,
        combined=combined,
        mask=trace.indexed.mask.copy(),
        word_neg=average_over_fragments(neg, spans),
        word_pos=average_over_fragments(pos, spans),
        word_combined=average_over_fragments(combined, spans),
        indexed=trace.indexed,
    )


def label_tokens(decomp: TokenDecomposition, offset: float = 0.0) -> np.ndarray:
    """Per-word 0/1 labels: positive iff the combined score exceeds ``offset``."""
    return (decomp.word_combined > offset).astype(np.int8)


def predict_sentence(trace: ForwardTrace) -> int:
    """Argmax class of the output distribution; exact ties go to class 0."""
    return int(trace.probs[1] > trace.probs[0])


def exemplar_vectors(trace: ForwardTrace, model: BladeModel) -> np.ndarray:
    """Per-word fingerprint vectors from an all-width-1 model.

    Position n's fingerprint stacks the raw feature-map value of every
    filter at n; a word split into fragments gets the fragment mean.
    Returns an array of shape (num_words, M); padding contributes nothing.
    """
    if not model.is_unit_width():
        raise UnsupportedConfigError(
            "exemplar vectors require every filter width to be 1"
        )
    per_position = np.concatenate(trace.feature_maps, axis=0).T  # (N, M)
    spans = trace.indexed.word_spans
    out = np.empty((len(spans), model.num_filters), dtype=np.float64)
    for w, (a, b) in enumerate(spans):
        out[w] = per_position[a:b].mean(axis=0)
    return out


# --- checkpoint serialization ------------------------------------------------

def model_to_bytes(model: BladeModel) -> bytes:
    """Serialize to the binary checkpoint layout (little-endian, exact)."""
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<I", CHECKPOINT_VERSION))
    buf.write(
        struct.pack(
            "<5I",
            model.vocab_size,
            model.word_dim,
            model.external_dim,
            model.num_filters,
            NUM_CLASSES,
        )
    )
    widths = model.widths
    buf.write(np.asarray(widths, dtype="<u4").tobytes())
    buf.write(np.ascontiguousarray(model.embeddings, dtype="<f8").tobytes())
    for g in model.groups:
        for m in range(g.count):
            buf.write(np.ascontiguousarray(g.weights[m], dtype="<f8").tobytes())
            buf.write(struct.pack("<d", float(g.bias[m])))
    buf.write(np.ascontiguousarray(model.linear_w, dtype="<f8").tobytes())
    buf.write(np.ascontiguousarray(model.linear_b, dtype="<f8").tobytes())
    return buf.getvalue()


def model_from_bytes(raw: bytes) -> BladeModel:
    buf = io.BytesIO(raw)
    magic = buf.read(4)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"bad checkpoint magic {magic!r}")
    (version,) = struct.unpack("<I", buf.read(4))
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    v, dw, de, m, c = struct.unpack("<5I", buf.read(20))
    if c != NUM_CLASSES:
        raise ValueError(f"checkpoint has {c} classes, expected {NUM_CLASSES}")
    widths = np.frombuffer(buf.read(4 * m), dtype="<u4").astype(int)
    emb = np.frombuffer(buf.read(8 * v * dw), dtype="<f8").reshape(v, dw).copy()
    d = dw + de
    groups: list[FilterGroup] = []
    i = 0
    while i < m:
        width = int(widths[i])
        j = i
        while j < m and int(widths[j]) == width:
            j += 1
        count = j - i
        w = np.empty((count, width, d), dtype=np.float64)
        bias = np.empty(count, dtype=np.float64)
        for t in range(count):
            w[t] = np.frombuffer(buf.read(8 * width * d), dtype="<f8").reshape(width, d)
            (bias[t],) = struct.unpack("<d", buf.read(8))
        groups.append(FilterGroup(width=width, weights=w, bias=bias))
        i = j
    lw = np.frombuffer(buf.read(8 * NUM_CLASSES * m), dtype="<f8").reshape(
        NUM_CLASSES, m
    ).copy()
    lb = np.frombuffer(buf.read(8 * NUM_CLASSES), dtype="<f8").copy()
    if buf.read(1):
        raise ValueError("trailing bytes after checkpoint payload")
    return BladeModel(
        embeddings=emb, external_dim=de, groups=groups, linear_w=lw, linear_b=lb
    )


def save_model(model: BladeModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def load_model(path) -> BladeModel:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())


def model_fingerprint(model: BladeModel) -> bytes:
    """32-byte digest of the canonical checkpoint bytes."""
    return hashlib.sha256(model_to_bytes(model)).digest()


def copy_model(model: BladeModel) -> BladeModel:
    return BladeModel(
        embeddings=model.embeddings.copy(),
        external_dim=model.external_dim,
        groups=[
            FilterGroup(width=g.width, weights=g.weights.copy(), bias=g.bias.copy())
            for g in model.groups
        ],
        linear_w=model.linear_w.copy(),
        linear_b=model.linear_b.copy(),
    )
