"""Class-conditional ngram and sentence scoring for comparative summaries.

Each word carries a bias-corrected contribution score toward each class;
summing those scores over a window of z words scores the ngram, and over
the whole instance scores the sentence. Aggregating window scores by
surface form surfaces the phrases most associated with each class, and
splitting by gold versus predicted label surfaces what the model gets
wrong.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .model import BladeModel
from .pipeline import Prepared, predict_instance

NEGATIVE, POSITIVE = 0, 1
CLASS_NAMES = {NEGATIVE: "negative", POSITIVE: "positive"}


@dataclass
class ScoredInstance:
    """Word-level bias-corrected contributions plus labels for one instance."""

    instance_id: str
    tokens: list[str]
    contributions: dict[int, np.ndarray]  # class -> per-word score minus bias
    gold: int
    predicted: int


def score_corpus(
    model: BladeModel, prepared: list[Prepared], offset: float = 0.0
) -> list[ScoredInstance]:
    """Run the model and keep the per-word class contributions."""
    out = []
    for prep in prepared:
        pred = predict_instance(model, prep, offset)
        kept = len(prep.indexed.word_spans)
        out.append(
            ScoredInstance(
                instance_id=prep.instance.id,
                tokens=prep.instance.tokens[:kept],
                contributions={
                    NEGATIVE: pred.decomp.word_neg - model.linear_b[0],
                    POSITIVE: pred.decomp.word_pos - model.linear_b[1],
                },
                gold=prep.sentence_label,
                predicted=pred.sentence_pred,
            )
        )
    return out


@dataclass
class NgramScore:
    text: str
    cls: int
    z: int
    total: float
    count: int

    @property
    def mean(self) -> float:
        return self.total / self.count


def ngram_scores(
    scored: list[ScoredInstance],
    cls: int,
    z: int,
    mode: str = "total",
    restrict_to_predicted: bool = True,
) -> list[NgramScore]:
    """Rank every within-instance window of z words by aggregated score.

    Windows never cross instance boundaries. With the restriction on,
    only instances the model predicts as class ``cls`` contribute.
    Ranking is descending by the chosen aggregate, ties broken by the
    ngram's surface text.
    """
    if z < 1:
        raise ValueError("ngram size must be >= 1")
    if mode not in ("total", "mean"):
        raise ValueError(f"unknown aggregation mode {mode!r}")
    totals: dict[str, float] = {}
    counts: dict[str, int] = {}
    for inst in scored:
        if restrict_to_predicted and inst.predicted != cls:
            continue
        contrib = inst.contributions[cls]
        for start in range(0, len(inst.tokens) - z + 1):
            text = " ".join(inst.tokens[start : start + z])
            window = float(contrib[start : start + z].sum())
            totals[text] = totals.get(text, 0.0) + window
            counts[text] = counts.get(text, 0) + 1
    items = [
        NgramScore(text=t, cls=cls, z=z, total=totals[t], count=counts[t])
        for t in totals
    ]
    key = (lambda s: (-s.total, s.text)) if mode == "total" else (
        lambda s: (-s.mean, s.text)
    )
    items.sort(key=key)
    return items


@dataclass
class SentenceScore:
    instance_id: str
    cls: int
    score: float
    normalized: float
    gold: int
    predicted: int
    num_words: int


def sentence_scores(
    scored: list[ScoredInstance], cls: int, normalize: bool = False
) -> list[SentenceScore]:
    """Whole-instance contribution sums, optionally per word, ranked descending."""
    out = []
    for inst in scored:
        if len(inst.tokens) == 0:
            raise ValueError(f"instance {inst.instance_id!r} has no words to score")
        total = float(inst.contributions[cls].sum())
        out.append(
            SentenceScore(
                instance_id=inst.instance_id,
                cls=cls,
                score=total,
                normalized=total / len(inst.tokens),
                gold=inst.gold,
                predicted=inst.predicted,
                num_words=len(inst.tokens),
            )
        )
    value = (lambda s: s.normalized) if normalize else (lambda s: s.score)
    out.sort(key=lambda s: (-value(s), s.instance_id))
    return out


def report(
    scored: list[ScoredInstance],
    zs: tuple[int, ...] = (1, 2, 3, 4, 5),
    mode: str = "total",
    top_k: int = 10,
    restrict_to_predicted: bool = True,
    drop_repeated_scores: bool = False,
) -> tuple[str, list[dict]]:
    """Deterministic text report plus machine-readable rows.

    For each class: the top and bottom ``top_k`` ngrams per window size,
    the highest- and lowest-ranked instances, and instance listings split
    by (gold, predicted) label pairs. ``drop_repeated_scores`` suppresses
    consecutive display rows whose unrounded score repeats the previous
    one; the underlying scores are unaffected.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    lines: list[str] = []
    rows: list[dict] = []
    for cls in (NEGATIVE, POSITIVE):
        lines.append(f"== class {CLASS_NAMES[cls]} ==")
        for z in zs:
            ranked = ngram_scores(scored, cls, z, mode, restrict_to_predicted)
            for item in ranked:
                rows.append(
                    {
                        "ngram": item.text,
                        "class": CLASS_NAMES[cls],
                        "z": z,
                        "total": item.total,
                        "count": item.count,
                        "mean": item.mean,
                    }
                )
            lines.append(f"-- {z}-grams ({mode}) --")
            lines.extend(
                _ngram_rows(ranked[:top_k], mode, drop_repeated_scores)
            )
            if len(ranked) > top_k:
                lines.append("   ...")
                lines.extend(
                    _ngram_rows(ranked[-top_k:], mode, drop_repeated_scores)
                )
        ranked_sents = sentence_scores(scored, cls, normalize=True)
        lines.append("-- instances (length-normalized) --")
        for s in ranked_sents[:top_k]:
            lines.append(
                f"   {s.normalized:+.4f} gold={s.gold} pred={s.predicted} "
                f"id={s.instance_id}"
            )
        for g in (0, 1):
            for p in (0, 1):
                subset = [s for s in ranked_sents if s.gold == g and s.predicted == p]
                lines.append(f"-- gold={g} predicted={p}: {len(subset)} instances --")
                for s in subset[: min(top_k, len(subset))]:
                    lines.append(f"   {s.normalized:+.4f} id={s.instance_id}")
    return "\n".join(lines) + "\n", rows


def _ngram_rows(items: list[NgramScore], mode: str, drop_repeats: bool) -> list[str]:
    out = []
    last = None
    for item in items:
        value = item.total if mode == "total" else item.mean
        if drop_repeats and last is not None and value == last:
            continue
        last = value
        out.append(f"   {value:+.4f} n={item.count} {item.text!r}")
    return out


def write_feature_rows(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
