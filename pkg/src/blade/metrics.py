"""Precision/recall/F-measure arithmetic, baselines, and boundary tuning."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass
class PRF:
    """Percent-scaled precision, recall, and F-beta with raw counts."""

    precision: float
    recall: float
    fscore: float
    beta: float
    tp: int
    fp: int
    fn: int
    tn: int

    def row(self) -> str:
        return (
            f"P={self.precision:.2f} R={self.recall:.2f} "
            f"F{self.beta:g}={self.fscore:.2f} "
            f"(tp={self.tp} fp={self.fp} fn={self.fn} tn={self.tn})"
        )


def fbeta(precision: float, recall: float, beta: float = 1.0) -> float:
    """F-beta from percent-scaled precision and recall; 0 when degenerate."""
    denom = beta * beta * precision + recall
    if denom == 0.0:
        return 0.0
    return (1.0 + beta * beta) * precision * recall / denom


def prf_from_counts(tp: int, fp: int, fn: int, tn: int = 0, beta: float = 1.0) -> PRF:
    precision = 100.0 * tp / (tp + fp) if tp + fp else 0.0
    recall = 100.0 * tp / (tp + fn) if tp + fn else 0.0
    return PRF(
        precision=precision,
        recall=recall,
        fscore=fbeta(precision, recall, beta),
        beta=beta,
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
    )


def prf(pred, gold, beta: float = 1.0) -> PRF:
    """Score aligned 0/1 label sequences, class 1 positive.

    ``pred`` and ``gold`` are either flat sequences or lists of per-instance
    sequences of matching lengths (padding removed upstream).
    """
    pred_flat = _flatten(pred)
    gold_flat = _flatten(gold, expected=len(pred_flat))
    tp = int(np.sum((pred_flat == 1) & (gold_flat == 1)))
    fp = int(np.sum((pred_flat == 1) & (gold_flat == 0)))
    fn = int(np.sum((pred_flat == 0) & (gold_flat == 1)))
    tn = int(np.sum((pred_flat == 0) & (gold_flat == 0)))
    return prf_from_counts(tp, fp, fn, tn, beta)


def _flatten(labels, expected: int | None = None) -> np.ndarray:
    if len(labels) and np.ndim(labels[0]) > 0:
        parts = [np.asarray(seq, dtype=np.int64).ravel() for seq in labels]
        flat = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
    else:
        flat = np.asarray(labels, dtype=np.int64).ravel()
    if expected is not None and flat.shape[0] != expected:
        raise ValueError(
            f"prediction/gold length mismatch: {expected} vs {flat.shape[0]}"
        )
    return flat


def accuracy(pred, gold) -> float:
    pred_flat = _flatten(pred)
    gold_flat = _flatten(gold, expected=len(pred_flat))
    if pred_flat.shape[0] == 0:
        raise ValueError("accuracy of an empty label set")
    return 100.0 * float(np.mean(pred_flat == gold_flat))


@dataclass
class BaselineReport:
    random_sentence: PRF
    random_token: PRF
    majority_sentence: PRF
    majority_token: PRF
    majority_class: int


def baselines(
    sentence_gold,
    token_gold,
    seed: int = 0,
    beta: float = 1.0,
) -> BaselineReport:
    """Fair-coin and majority-class reference scores.

    The majority class is taken over the sentence labels of the evaluation
    set (ties go to the positive class) and applied uniformly at both the
    sentence and token level, so a mostly-positive corpus yields the
    familiar all-positive token baseline.
    """
    sentence_gold = np.asarray(sentence_gold, dtype=np.int64)
    if sentence_gold.size == 0:
        raise ValueError("baselines need a non-empty evaluation set")
    rng = np.random.default_rng(seed)
    rand_sent = rng.integers(0, 2, size=sentence_gold.shape[0])
    rand_tok = [
        rng.integers(0, 2, size=len(seq)) for seq in token_gold
    ]
    majority = 1 if np.sum(sentence_gold == 1) >= np.sum(sentence_gold == 0) else 0
    maj_sent = np.full(sentence_gold.shape[0], majority)
    maj_tok = [np.full(len(seq), majority) for seq in token_gold]
    return BaselineReport(
        random_sentence=prf(rand_sent, sentence_gold, beta),
        random_token=prf(rand_tok, token_gold, beta),
        majority_sentence=prf(maj_sent, sentence_gold, beta),
        majority_token=prf(maj_tok, token_gold, beta),
        majority_class=majority,
    )


def tune_offset(
    scores,
    gold,
    beta: float = 0.5,
    grid_points: int = 1001,
) -> float:
    """Pick the decision-boundary shift maximizing token F-beta.

    Candidate offsets are the empirical quantiles of the combined scores
    (``grid_points`` of them) plus 0. A word is predicted positive when
    its score strictly exceeds the offset. Ties on F-beta prefer the
    offset closest to 0, then the smaller offset.
    """
    flat_scores = np.concatenate([np.asarray(s, dtype=np.float64) for s in scores])
    flat_gold = np.concatenate([np.asarray(g, dtype=np.int64) for g in gold])
    if flat_scores.shape[0] == 0:
        raise ValueError("offset tuning needs a non-empty labeled set")
    if flat_scores.shape[0] != flat_gold.shape[0]:
        raise ValueError("scores and gold labels are misaligned")
    quantiles = np.quantile(flat_scores, np.linspace(0.0, 1.0, grid_points))
    candidates = np.unique(np.concatenate([quantiles, [0.0]]))
    best = None
    for delta in candidates:
        pred = (flat_scores > delta).astype(np.int64)
        score = prf(pred, flat_gold, beta).fscore
        key = (-score, abs(delta), delta)
        if best is None or key < best[0]:
            best = (key, delta)
    return float(best[1])


def warn_if_no_positive_gold(gold_flat: np.ndarray, context: str) -> None:
    if not np.any(gold_flat == 1):
        warnings.warn(f"{context}: no positive gold labels; F reported as 0")
