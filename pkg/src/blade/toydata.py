"""Synthetic corpora for experiments, demos, and end-to-end tests.

The trigger task is a controlled stand-in for token-level detection from
sentence-level supervision: a positive sentence is one containing any
word from a small trigger set, so trigger membership doubles as the true
token label. A companion generator produces a second "domain" whose
sentences reuse the trigger words in benign, all-negative contexts, and
another builds candidate-completion groups for re-ranking.
"""

from __future__ import annotations

import numpy as np

from .data import LabeledInstance


def trigger_vocabulary(num_fillers: int = 190, num_triggers: int = 10):
    fillers = [f"w{i:03d}" for i in range(num_fillers)]
    triggers = [f"trig{i}" for i in range(num_triggers)]
    return fillers, triggers


def make_trigger_corpus(
    size: int,
    seed: int = 0,
    num_fillers: int = 190,
    num_triggers: int = 10,
    min_len: int = 5,
    max_len: int = 12,
    positive_rate: float = 0.5,
) -> list[LabeledInstance]:
    """Sentences over a small vocabulary; positives carry 1-3 distinct triggers."""
    fillers, triggers = trigger_vocabulary(num_fillers, num_triggers)
    rng = np.random.default_rng(seed)
    out = []
    for i in range(size):
        n = int(rng.integers(min_len, max_len + 1))
        tokens = [fillers[int(j)] for j in rng.integers(0, len(fillers), size=n)]
        labels = [0] * n
        positive = rng.random() < positive_rate
        if positive:
            k = int(rng.integers(1, 4))
            chosen = rng.choice(len(triggers), size=min(k, n), replace=False)
            positions = rng.choice(n, size=min(k, n), replace=False)
            for t, p in zip(chosen, positions):
                tokens[int(p)] = triggers[int(t)]
                labels[int(p)] = 1
        out.append(
            LabeledInstance(
                id=f"trig-{seed}-{i}",
                tokens=tokens,
                sentence_label=int(positive),
                token_labels=labels,
            )
        )
    return out


def make_benign_domain_corpus(
    size: int,
    seed: int = 0,
    num_triggers: int = 10,
    num_domain_fillers: int = 4,
    min_len: int = 6,
    max_len: int = 10,
) -> list[LabeledInstance]:
    """All-negative sentences from a new domain that reuse the trigger words.

    The filler vocabulary is tiny and disjoint from the training fillers,
    so every trigger occurrence sits in a context characteristic of this
    domain. All token labels are 0: here the triggers are benign.
    """
    _, triggers = trigger_vocabulary(num_triggers=num_triggers)
    fillers = [f"news{i}" for i in range(num_domain_fillers)]
    rng = np.random.default_rng(seed)
    out = []
    for i in range(size):
        n = int(rng.integers(min_len, max_len + 1))
        tokens = [fillers[int(j)] for j in rng.integers(0, len(fillers), size=n)]
        k = int(rng.integers(1, 3))
        chosen = rng.choice(num_triggers, size=k, replace=False)
        positions = rng.choice(np.arange(1, n - 1), size=k, replace=False)
        for t, p in zip(chosen, positions):
            tokens[int(p)] = triggers[int(t)]
        out.append(
            LabeledInstance(
                id=f"benign-{seed}-{i}",
                tokens=tokens,
                sentence_label=0,
                token_labels=[0] * n,
            )
        )
    return out


def make_candidate_groups(
    num_groups: int,
    candidates_per_group: int = 50,
    seed: int = 0,
    num_fillers: int = 190,
    num_triggers: int = 10,
) -> list[LabeledInstance]:
    """Candidate completions per group, half of them carrying trigger tokens.

    Every candidate repeats its group's human-written prefix and differs
    in the completion; gold token labels mark the trigger positions.
    Lengths vary around the original so the length tie-break is exercised.
    """
    fillers, triggers = trigger_vocabulary(num_fillers, num_triggers)
    rng = np.random.default_rng(seed)
    out = []
    for g in range(num_groups):
        prefix_len = int(rng.integers(3, 6))
        prefix = [fillers[int(j)] for j in rng.integers(0, len(fillers), prefix_len)]
        original_len = prefix_len + int(rng.integers(3, 6))
        for c in range(candidates_per_group):
            comp_len = int(rng.integers(2, 8))
            completion = [
                fillers[int(j)] for j in rng.integers(0, len(fillers), comp_len)
            ]
            tokens = prefix + completion
            labels = [0] * len(tokens)
            if c % 2 == 1:
                k = int(rng.integers(1, 4))
                chosen = rng.choice(num_triggers, size=min(k, comp_len), replace=False)
                positions = rng.choice(comp_len, size=min(k, comp_len), replace=False)
                for t, p in zip(chosen, positions):
                    tokens[prefix_len + int(p)] = triggers[int(t)]
                    labels[prefix_len + int(p)] = 1
            out.append(
                LabeledInstance(
                    id=f"group{g}-cand{c}",
                    tokens=tokens,
                    sentence_label=int(any(labels)),
                    token_labels=labels,
                    group_id=f"group{g}",
                    original_len=original_len,
                )
            )
    return out
