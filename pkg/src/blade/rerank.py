"""Detection-constrained candidate selection.

Given groups of candidate completions that share a human-written prefix,
pick the candidate the token detector flags least. Ties on the detection
count prefer candidates whose word length is closest to the original
sentence; remaining ties are broken uniformly at random with a per-group
generator derived from the run seed and the group id.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .metrics import PRF, prf
from .model import BladeModel
from .pipeline import Prepared, predict_instance


@dataclass
class CandidateGroup:
    group_id: str
    original_len: int
    candidates: list[Prepared]


def group_candidates(prepared: list[Prepared]) -> list[CandidateGroup]:
    """Collect prepared instances into groups, dropping duplicate token
    sequences within each group (first occurrence wins)."""
    by_group: dict[str, CandidateGroup] = {}
    seen: dict[str, set[tuple[str, ...]]] = {}
    order: list[str] = []
    for prep in prepared:
        inst = prep.instance
        if inst.group_id is None or inst.original_len is None:
            raise ValueError(
                f"instance {inst.id!r} lacks group_id/original_len fields"
            )
        gid = inst.group_id
        if gid not in by_group:
            by_group[gid] = CandidateGroup(
                group_id=gid, original_len=inst.original_len, candidates=[]
            )
            seen[gid] = set()
            order.append(gid)
        key = tuple(inst.tokens)
        if key in seen[gid]:
            continue
        seen[gid].add(key)
        by_group[gid].candidates.append(prep)
    return [by_group[g] for g in order]


@dataclass
class Selection:
    group_id: str
    chosen_id: str
    chosen_index: int
    detections: int
    pool_size: int
    pool_mean: float
    pool_min: int
    word_labels: np.ndarray
    gold_labels: np.ndarray | None


def _group_rng(seed: int, group_id: str) -> np.random.Generator:
    h = int.from_bytes(hashlib.sha256(group_id.encode("utf-8")).digest()[:8], "little")
    return np.random.default_rng([seed, h])


def rerank(
    model: BladeModel,
    groups: list[CandidateGroup],
    seed: int = 0,
    offset: float = 0.0,
) -> list[Selection]:
    """Choose, per group, a candidate attaining the minimum detection count."""
    selections = []
    for group in groups:
        if not group.candidates:
            raise ValueError(f"group {group.group_id!r} has no candidates")
        counts = []
        labelings = []
        for prep in group.candidates:
            pred = predict_instance(model, prep, offset)
            labelings.append(pred.word_labels)
            counts.append(int(pred.word_labels.sum()))
        counts_arr = np.asarray(counts)
        best_count = int(counts_arr.min())
        pool = np.flatnonzero(counts_arr == best_count)
        len_gap = np.asarray(
            [
                abs(len(group.candidates[i].instance.tokens) - group.original_len)
                for i in pool
            ]
        )
        finalists = pool[len_gap == len_gap.min()]
        rng = _group_rng(seed, group.group_id)
        chosen = int(finalists[rng.integers(0, finalists.shape[0])])
        prep = group.candidates[chosen]
        selections.append(
            Selection(
                group_id=group.group_id,
                chosen_id=prep.instance.id,
                chosen_index=chosen,
                detections=best_count,
                pool_size=len(group.candidates),
                pool_mean=float(counts_arr.mean()),
                pool_min=best_count,
                word_labels=labelings[chosen],
                gold_labels=prep.word_labels,
            )
        )
    return selections


@dataclass
class RerankReport:
    prf: PRF
    mean_detections: float


def rerank_eval(selections: list[Selection], beta: float = 1.0) -> RerankReport:
    """Token-level scores of the chosen candidates against their gold labels."""
    pred = []
    gold = []
    for sel in selections:
        if sel.gold_labels is None:
            raise ValueError(
                f"group {sel.group_id!r}: chosen candidate has no gold labels"
            )
        pred.append(sel.word_labels)
        gold.append(sel.gold_labels)
    mean_detections = float(np.mean([sel.detections for sel in selections]))
    return RerankReport(prf=prf(pred, gold, beta), mean_detections=mean_detections)
