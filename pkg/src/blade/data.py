"""Corpus loading, vocabulary construction, and subword/word alignment.

Instances are tokenized sentences or documents with a binary label at the
sentence level and, optionally, per-word binary labels. Words may be split
into several subword fragments by an upstream tokenizer; the per-word
fragment counts are carried alongside the tokens so that fragment-level
score sequences can be averaged back to word granularity.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

PAD_INDEX = 0
UNK_INDEX = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"


class CorpusFormatError(ValueError):
    """Raised when a corpus file or record violates the line format."""


@dataclass
class LabeledInstance:
    """One tokenized instance with sentence-level and optional token labels."""

    id: str
    tokens: list[str]
    sentence_label: int
    token_labels: list[int] | None = None
    wordpiece_counts: list[int] | None = None
    # Candidate-group fields used only by the re-ranking input format.
    group_id: str | None = None
    original_len: int | None = None

    def __post_init__(self):
        if self.sentence_label not in (0, 1):
            raise CorpusFormatError(
                f"instance {self.id!r}: sentence_label must be 0 or 1, "
                f"got {self.sentence_label!r}"
            )
        if self.token_labels is not None:
            if len(self.token_labels) != len(self.tokens):
                raise CorpusFormatError(
                    f"instance {self.id!r}: {len(self.token_labels)} token_labels "
                    f"for {len(self.tokens)} tokens"
                )
            for y in self.token_labels:
                if y not in (0, 1):
                    raise CorpusFormatError(
                        f"instance {self.id!r}: token label {y!r} outside {{0,1}}"
                    )
        if self.wordpiece_counts is not None:
            if len(self.wordpiece_counts) != len(self.tokens):
                raise CorpusFormatError(
                    f"instance {self.id!r}: wordpiece_counts length mismatch"
                )
            for c in self.wordpiece_counts:
                if not isinstance(c, int) or c < 1:
                    raise CorpusFormatError(
                        f"instance {self.id!r}: fragment count {c!r} must be a "
                        "positive integer"
                    )

    @property
    def num_words(self) -> int:
        return len(self.tokens)

    def fragment_counts(self) -> list[int]:
        """Per-word fragment counts, defaulting to one fragment per word."""
        if self.wordpiece_counts is not None:
            return list(self.wordpiece_counts)
        return [1] * len(self.tokens)

    def num_wordpieces(self) -> int:
        return sum(self.fragment_counts())


def load_corpus(path, max_instances: int | None = None) -> list[LabeledInstance]:
    """Read a line-delimited corpus file into LabeledInstance records.

    Each line is a JSON object with fields ``tokens`` (array of strings) and
    ``sentence_label`` (0/1); ``id``, ``token_labels``, ``wordpiece_counts``,
    ``group_id``, and ``original_len`` are optional. Instances are returned
    in file order. Malformed lines raise CorpusFormatError with the
    offending line number.
    """
    instances: list[LabeledInstance] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise CorpusFormatError(f"{path}:{lineno}: record is not an object")
            try:
                inst = instance_from_record(obj, default_id=str(lineno - 1))
            except CorpusFormatError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: {exc}") from exc
            instances.append(inst)
            if max_instances is not None and len(instances) >= max_instances:
                break
    return instances


def instance_from_record(obj: dict, default_id: str = "0") -> LabeledInstance:
    """Build a LabeledInstance from one decoded corpus record."""
    if "tokens" not in obj or "sentence_label" not in obj:
        raise CorpusFormatError("missing required field 'tokens' or 'sentence_label'")
    tokens = obj["tokens"]
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise CorpusFormatError("'tokens' must be an array of strings")
    return LabeledInstance(
        id=str(obj.get("id", default_id)),
        tokens=tokens,
        sentence_label=obj["sentence_label"],
        token_labels=obj.get("token_labels"),
        wordpiece_counts=obj.get("wordpiece_counts"),
        group_id=obj.get("group_id"),
        original_len=obj.get("original_len"),
    )


def instance_to_record(inst: LabeledInstance) -> dict:
    record: dict = {
        "id": inst.id,
        "tokens": inst.tokens,
        "sentence_label": inst.sentence_label,
    }
    if inst.token_labels is not None:
        record["token_labels"] = inst.token_labels
    if inst.wordpiece_counts is not None:
        record["wordpiece_counts"] = inst.wordpiece_counts
    if inst.group_id is not None:
        record["group_id"] = inst.group_id
    if inst.original_len is not None:
        record["original_len"] = inst.original_len
    return record


def save_corpus(instances: list[LabeledInstance], path) -> None:
    """Write instances in the line-delimited corpus format (UTF-8)."""
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(instance_to_record(inst), ensure_ascii=False))
            fh.write("\n")


def check_detection_convention(instances: list[LabeledInstance]) -> list[str]:
    """Ids violating the error-detection labeling convention.

    Corpora in that convention mark a sentence positive exactly when some
    token is marked positive. Only callers who know their corpus follows
    the convention should treat violations as errors; instances without
    token labels are skipped.
    """
    bad = []
    for inst in instances:
        if inst.token_labels is None:
            continue
        if inst.sentence_label != int(any(inst.token_labels)):
            bad.append(inst.id)
    return bad


@dataclass
class Vocabulary:
    """Fixed-size token-to-index map with reserved padding/unknown slots."""

    index: dict[str, int]

    def __len__(self) -> int:
        return len(self.index)

    def lookup(self, token: str) -> int:
        return self.index.get(token, UNK_INDEX)

    def tokens_in_order(self) -> list[str]:
        ordered = sorted(self.index.items(), key=lambda kv: kv[1])
        return [tok for tok, _ in ordered]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self.tokens_in_order():
                if "\n" in tok:
                    raise CorpusFormatError(
                        f"token {tok!r} contains a newline and cannot be "
                        "stored in a vocabulary file"
                    )
                fh.write(tok + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, "r", encoding="utf-8") as fh:
            toks = [line.rstrip("\n") for line in fh]
        if len(toks) < 2 or toks[0] != PAD_TOKEN or toks[1] != UNK_TOKEN:
            raise CorpusFormatError(f"{path}: not a vocabulary file")
        return cls(index={tok: i for i, tok in enumerate(toks)})


def build_vocab(corpus: list[LabeledInstance], size: int) -> Vocabulary:
    """Keep the ``size - 2`` most frequent tokens; ties break lexicographically.

    Index 0 is padding and index 1 the unknown token. Construction is
    deterministic: equal corpora and sizes yield index-identical maps.
    """
    if size < 2:
        raise ValueError(f"vocabulary size must be at least 2, got {size}")
    counts = Counter()
    for inst in corpus:
        counts.update(inst.tokens)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    index = {PAD_TOKEN: PAD_INDEX, UNK_TOKEN: UNK_INDEX}
    for token, _ in ranked[: size - 2]:
        index[token] = len(index)
    return Vocabulary(index=index)


@dataclass
class IndexedInstance:
    """Index sequence at fragment granularity, padded for convolution.

    ``indices`` has length N >= the widest filter; ``mask`` marks real
    (non-padding) positions; ``word_spans`` gives, for each word, the
    half-open fragment range it occupies. Spans tile [0, real_length).
    """

    indices: np.ndarray
    mask: np.ndarray
    word_spans: list[tuple[int, int]]
    instance: LabeledInstance = field(repr=False)

    @property
    def length(self) -> int:
        return int(self.indices.shape[0])

    @property
    def real_length(self) -> int:
        return int(self.mask.sum())


def index_instance(
    inst: LabeledInstance,
    vocab: Vocabulary,
    min_length: int = 1,
    max_wordpieces: int | None = None,
) -> IndexedInstance:
    """Map an instance to fragment-level indices with word spans.

    A word's index is repeated across each of its fragments. Instances
    longer than ``max_wordpieces`` fragments are truncated at a word
    boundary; right padding extends short sequences to ``min_length``.
    """
    counts = inst.fragment_counts()
    keep = len(inst.tokens)
    if max_wordpieces is not None:
        total = 0
        keep = 0
        for c in counts:
            if total + c > max_wordpieces:
                break
            total += c
            keep += 1
        if keep == 0:
            raise CorpusFormatError(
                f"instance {inst.id!r}: first word exceeds max_wordpieces="
                f"{max_wordpieces}"
            )
    indices: list[int] = []
    spans: list[tuple[int, int]] = []
    for word, c in zip(inst.tokens[:keep], counts[:keep]):
        start = len(indices)
        indices.extend([vocab.lookup(word)] * c)
        spans.append((start, start + c))
    real = len(indices)
    n = max(real, min_length)
    arr = np.full(n, PAD_INDEX, dtype=np.int64)
    arr[:real] = indices
    mask = np.zeros(n, dtype=bool)
    mask[:real] = True
    return IndexedInstance(indices=arr, mask=mask, word_spans=spans, instance=inst)


def average_over_fragments(scores, word_spans) -> np.ndarray:
    """Average a fragment-level score sequence back to word level.

    ``scores`` must cover exactly the fragments spanned by ``word_spans``
    (padding trimmed beforehand or present beyond the last span). With
    all-singleton spans this is the identity map.
    """
    scores = np.asarray(scores, dtype=np.float64)
    total = word_spans[-1][1] if word_spans else 0
    if scores.shape[0] < total:
        raise ValueError(
            f"{scores.shape[0]} scores cannot cover {total} fragments"
        )
    out = np.empty(len(word_spans), dtype=np.float64)
    for w, (a, b) in enumerate(word_spans):
        out[w] = scores[a:b].mean()
    return out


def expand_to_fragments(values, word_spans) -> np.ndarray:
    """Repeat one value per word across that word's fragment range."""
    values = np.asarray(values)
    total = word_spans[-1][1] if word_spans else 0
    out = np.zeros(total, dtype=values.dtype)
    for w, (a, b) in enumerate(word_spans):
        out[a:b] = values[w]
    return out
