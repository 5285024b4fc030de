"""Shared corpus preparation and prediction plumbing.

Pairs corpus instances with their vocabulary indices, optional frozen
embedding rows, and fragment-aligned labels, so that training, database
construction, scoring, and the command-line tools all consume the same
prepared form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import (
    IndexedInstance,
    LabeledInstance,
    Vocabulary,
    expand_to_fragments,
    index_instance,
)
from .embeddings import EmbeddingSet
from .model import (
    BladeModel,
    TokenDecomposition,
    decompose,
    forward,
    label_tokens,
    predict_sentence,
)


@dataclass
class Prepared:
    """One instance ready for the network."""

    indexed: IndexedInstance
    external_rows: np.ndarray | None
    sentence_label: int
    word_labels: np.ndarray | None
    fragment_labels: np.ndarray | None

    @property
    def instance(self) -> LabeledInstance:
        return self.indexed.instance


def prepare_corpus(
    corpus: list[LabeledInstance],
    vocab: Vocabulary,
    min_length: int,
    embeddings: EmbeddingSet | None = None,
    max_wordpieces: int | None = None,
) -> list[Prepared]:
    """Index every instance and attach external rows and aligned labels.

    When an embedding set is supplied, sentence i of the set belongs to
    instance i of the corpus; fragment counts must agree exactly.
    """
    if embeddings is not None and len(embeddings) != len(corpus):
        raise ValueError(
            f"embedding set has {len(embeddings)} sentences for "
            f"{len(corpus)} instances"
        )
    out: list[Prepared] = []
    for i, inst in enumerate(corpus):
        if embeddings is not None:
            emb_counts = embeddings.fragment_counts(i)
            if emb_counts != inst.fragment_counts():
                raise ValueError(
                    f"instance {inst.id!r}: fragment counts disagree with "
                    "embedding file"
                )
        indexed = index_instance(
            inst, vocab, min_length=min_length, max_wordpieces=max_wordpieces
        )
        rows = None
        if embeddings is not None:
            rows = embeddings.rows(i)[: indexed.real_length]
        word_labels = None
        frag_labels = None
        if inst.token_labels is not None:
            kept = len(indexed.word_spans)
            word_labels = np.asarray(inst.token_labels[:kept], dtype=np.int8)
            frag_labels = expand_to_fragments(word_labels, indexed.word_spans)
        out.append(
            Prepared(
                indexed=indexed,
                external_rows=rows,
                sentence_label=inst.sentence_label,
                word_labels=word_labels,
                fragment_labels=frag_labels,
            )
        )
    return out


@dataclass
class Prediction:
    """Model output for one instance at a fixed decision boundary."""

    instance_id: str
    sentence_pred: int
    word_labels: np.ndarray
    decomp: TokenDecomposition
    probs: np.ndarray


def predict_instance(
    model: BladeModel, prep: Prepared, offset: float = 0.0
) -> Prediction:
    trace = forward(model, prep.indexed, prep.external_rows, mode="infer")
    decomp = decompose(trace, model)
    return Prediction(
        instance_id=prep.instance.id,
        sentence_pred=predict_sentence(trace),
        word_labels=label_tokens(decomp, offset),
        decomp=decomp,
        probs=trace.probs,
    )


def predict_corpus(
    model: BladeModel, prepared: list[Prepared], offset: float = 0.0
) -> list[Prediction]:
    return [predict_instance(model, p, offset) for p in prepared]
