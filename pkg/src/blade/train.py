"""Losses at three label granularities, analytic gradients, and Adadelta.

The loss heads all act on quantities the forward pass already produced:
the output distribution (sentence loss), the per-fragment combined
contribution scores (token loss), and the extreme contribution scores of
each sentence (min-max loss). Backpropagation is hand-derived: gradient
flows only through each filter's surviving window, gated by the ReLU,
with the training-time dropout mask replayed exactly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .model import BladeModel, copy_model, decompose, forward
from .pipeline import Prepared, predict_corpus

LOSS_KINDS = ("sentence-ce", "token-bce", "minmax")
DEV_METRICS = ("sentence-f1", "accuracy", "token-f05")
PROB_FLOOR = 1e-12


class _ClampCounter:
    """Counts probability clamps applied by the sentence loss."""

    def __init__(self):
        self.count = 0


clamp_events = _ClampCounter()


@dataclass
class TrainConfig:
    loss: str = "sentence-ce"
    batch_size: int = 50
    max_epochs: int = 20
    dropout: float = 0.5
    dev_metric: str = "sentence-f1"
    rho: float = 0.95
    eps: float = 1e-6
    lr: float = 1.0
    seed: int = 0
    trainable: str = "full"  # "full" or "cnn-only"
    train_filter_bias: bool = True

    def __post_init__(self):
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.dev_metric not in DEV_METRICS:
            raise ValueError(f"unknown dev metric {self.dev_metric!r}")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.trainable not in ("full", "cnn-only"):
            raise ValueError(f"unknown trainable set {self.trainable!r}")


# --- loss primitives ----------------------------------------------------------

def _softplus(x: np.ndarray | float) -> np.ndarray | float:
    # log(1 + exp(x)) without overflow
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def sentence_loss(probs: np.ndarray, label: int) -> float:
    """Cross-entropy of the output distribution against the sentence label."""
    p = float(probs[label])
    if p < PROB_FLOOR:
        clamp_events.count += 1
        p = PROB_FLOOR
    return -float(np.log(p))


def token_loss(combined: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    """Mean binary cross-entropy of sigmoid(combined) over real fragments.

    ``labels`` aligns with the real (non-padding) fragments: a split word
    repeats its word label on every fragment. Across a mini-batch the mean
    pools all fragments of all instances together; use
    :func:`token_loss_terms` for the pieces.
    """
    total, count = token_loss_terms(combined, labels, mask)
    if count == 0:
        raise ValueError("token loss over an instance with no real fragments")
    return total / count


def token_loss_terms(
    combined: np.ndarray, labels: np.ndarray, mask: np.ndarray
) -> tuple[float, int]:
    s = np.asarray(combined, dtype=np.float64)[mask]
    y = np.asarray(labels, dtype=np.float64)
    if y.shape[0] != s.shape[0]:
        raise ValueError(
            f"{y.shape[0]} fragment labels for {s.shape[0]} real fragments"
        )
    # -y log sigmoid(s) - (1-y) log(1 - sigmoid(s)), stably
    terms = _softplus(s) - s * y
    return float(terms.sum()), int(s.shape[0])


def minmax_loss(combined: np.ndarray, mask: np.ndarray, label: int) -> float:
    """Average of the two extreme-score constraints for one sentence.

    The smallest combined score is pushed negative regardless of the
    label; the largest is pushed toward the sentence label.
    """
    s = np.asarray(combined, dtype=np.float64)[mask]
    if s.shape[0] == 0:
        raise ValueError("min-max loss over an instance with no real fragments")
    s_min = float(s.min())
    s_max = float(s.max())
    l_min = float(_softplus(s_min))  # -log(1 - sigmoid(s_min))
    l_max = float(_softplus(s_max) - s_max * label)
    return 0.5 * (l_min + l_max)


# --- gradients ------------------------------------------------------------------

@dataclass
class GradientSet:
    """Arrays shape-matched to the model; frozen parameters stay zero."""

    embeddings: np.ndarray
    group_weights: list[np.ndarray]
    group_bias: list[np.ndarray]
    linear_w: np.ndarray
    linear_b: np.ndarray

    @classmethod
    def zeros_like(cls, model: BladeModel) -> "GradientSet":
        return cls(
            embeddings=np.zeros_like(model.embeddings),
            group_weights=[np.zeros_like(g.weights) for g in model.groups],
            group_bias=[np.zeros_like(g.bias) for g in model.groups],
            linear_w=np.zeros_like(model.linear_w),
            linear_b=np.zeros_like(model.linear_b),
        )

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        named = [("embeddings", self.embeddings)]
        for i, (w, b) in enumerate(zip(self.group_weights, self.group_bias)):
            named.append((f"group{i}.weights", w))
            named.append((f"group{i}.bias", b))
        named.append(("linear_w", self.linear_w))
        named.append(("linear_b", self.linear_b))
        return named

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(a))) for _, a in self.named_arrays())


def model_arrays(model: BladeModel) -> list[tuple[str, np.ndarray]]:
    """Parameter arrays in the same order GradientSet uses."""
    named = [("embeddings", model.embeddings)]
    for i, g in enumerate(model.groups):
        named.append((f"group{i}.weights", g.weights))
        named.append((f"group{i}.bias", g.bias))
    named.append(("linear_w", model.linear_w))
    named.append(("linear_b", model.linear_b))
    return named


def _backward_instance(
    model: BladeModel,
    trace,
    dlogits: np.ndarray | None,
    dcombined: np.ndarray | None,
    grads: GradientSet,
) -> None:
    """Accumulate one instance's contribution to the batch gradient."""
    m = model.num_filters
    pooled = trace.pooled
    dpooled = np.zeros(m, dtype=np.float64)

    if dcombined is not None:
        total = float(dcombined.sum())
        offset = 0
        for gi, g in enumerate(model.groups):
            c = g.count
            starts = trace.argmax[offset : offset + c]
            windows = starts[:, None] + np.arange(g.width)[None, :]
            window_sums = dcombined[windows].sum(axis=1)
            p = pooled[offset : offset + c]
            grads.linear_w[1, offset : offset + c] += window_sums * p
            grads.linear_w[0, offset : offset + c] -= window_sums * p
            wdiff = (
                model.linear_w[1, offset : offset + c]
                - model.linear_w[0, offset : offset + c]
            )
            dpooled[offset : offset + c] += wdiff * window_sums
            offset += c
        grads.linear_b[1] += total
        grads.linear_b[0] -= total

    if dlogits is not None:
        grads.linear_w += np.outer(dlogits, pooled)
        grads.linear_b += dlogits
        dpooled += model.linear_w.T @ dlogits

    if trace.dropout_mask is not None:
        dpooled = dpooled * trace.dropout_mask

    x = trace.inputs
    dx = np.zeros_like(x)
    offset = 0
    for gi, g in enumerate(model.groups):
        c = g.count
        h = trace.feature_maps[gi]
        starts = trace.argmax[offset : offset + c]
        active = h[np.arange(c), starts] > 0.0
        dh = dpooled[offset : offset + c] * active
        for j in range(g.width):
            rows = x[starts + j]  # (c, D)
            grads.group_weights[gi][:, j, :] += dh[:, None] * rows
            np.add.at(dx, starts + j, dh[:, None] * g.weights[:, j, :])
        grads.group_bias[gi] += dh
        offset += c

    np.add.at(grads.embeddings, trace.indexed.indices, dx[:, : model.word_dim])


def batch_loss(
    model: BladeModel,
    batch: list[Prepared],
    config: TrainConfig,
    dropout_masks: list[np.ndarray | None] | None = None,
) -> float:
    """Batch loss with fixed dropout masks; the finite-difference oracle
    perturbs parameters against exactly this function."""
    loss, _, _ = _batch_pass(model, batch, config, dropout_masks, want_grads=False)
    return loss


def gradients(
    model: BladeModel,
    batch: list[Prepared],
    config: TrainConfig,
    rng: np.random.Generator | None = None,
) -> tuple[float, GradientSet, list[np.ndarray | None]]:
    """Exact analytic batch gradient; returns the loss and the masks used."""
    if not batch:
        raise ValueError("gradient of an empty batch")
    masks: list[np.ndarray | None] = []
    if config.dropout > 0.0:
        if rng is None:
            raise ValueError("dropout requires a generator")
        for _ in batch:
            keep = rng.random(model.num_filters) >= config.dropout
            masks.append(keep.astype(np.float64) / (1.0 - config.dropout))
    else:
        masks = [None] * len(batch)
    loss, grads, _ = _batch_pass(model, batch, config, masks, want_grads=True)
    if not np.isfinite(loss):
        raise FloatingPointError(f"non-finite training loss {loss}")
    assert grads is not None
    if config.trainable == "cnn-only":
        grads.embeddings[:] = 0.0
        grads.linear_w[:] = 0.0
        grads.linear_b[:] = 0.0
    if not config.train_filter_bias:
        for b in grads.group_bias:
            b[:] = 0.0
    return loss, grads, masks


def _batch_pass(
    model: BladeModel,
    batch: list[Prepared],
    config: TrainConfig,
    dropout_masks: list[np.ndarray | None] | None,
    want_grads: bool,
) -> tuple[float, GradientSet | None, int]:
    grads = GradientSet.zeros_like(model) if want_grads else None
    if dropout_masks is None:
        dropout_masks = [None] * len(batch)

    traces = []
    decomps = []
    for prep, mk in zip(batch, dropout_masks):
        trace = forward(
            model,
            prep.indexed,
            prep.external_rows,
            mode="train" if mk is not None else "infer",
            dropout=config.dropout if mk is not None else 0.0,
            dropout_mask=mk,
        )
        traces.append(trace)
        if config.loss in ("token-bce", "minmax"):
            decomps.append(decompose(trace, model))

    b = len(batch)
    if config.loss == "sentence-ce":
        total = 0.0
        for prep, trace in zip(batch, traces):
            total += sentence_loss(trace.probs, prep.sentence_label)
            if want_grads:
                dlogits = trace.probs.copy()
                dlogits[prep.sentence_label] -= 1.0
                _backward_instance(model, trace, dlogits / b, None, grads)
        return total / b, grads, b

    if config.loss == "token-bce":
        count = 0
        total = 0.0
        pieces = []
        for prep, decomp in zip(batch, decomps):
            if prep.fragment_labels is None:
                raise ValueError(
                    f"instance {prep.instance.id!r} lacks token labels"
                )
            t, c = token_loss_terms(decomp.combined, prep.fragment_labels, decomp.mask)
            total += t
            count += c
            pieces.append((prep, decomp))
        if count == 0:
            raise ValueError("token loss over a batch with no real fragments")
        if want_grads:
            for (prep, decomp), trace in zip(pieces, traces):
                dcombined = np.zeros(decomp.combined.shape[0], dtype=np.float64)
                real = decomp.mask
                sig = _sigmoid(decomp.combined[real])
                dcombined[real] = (sig - prep.fragment_labels) / count
                _backward_instance(model, trace, None, dcombined, grads)
        return total / count, grads, count

    # minmax
    total = 0.0
    for prep, decomp, trace in zip(batch, decomps, traces):
        total += minmax_loss(decomp.combined, decomp.mask, prep.sentence_label)
        if want_grads:
            real_idx = np.flatnonzero(decomp.mask)
            s = decomp.combined[real_idx]
            i_min = real_idx[int(np.argmin(s))]
            i_max = real_idx[int(np.argmax(s))]
            dcombined = np.zeros(decomp.combined.shape[0], dtype=np.float64)
            dcombined[i_min] += float(_sigmoid(decomp.combined[i_min])) / (2.0 * b)
            dcombined[i_max] += (
                float(_sigmoid(decomp.combined[i_max])) - prep.sentence_label
            ) / (2.0 * b)
            _backward_instance(model, trace, None, dcombined, grads)
    return total / b, grads, b


# --- optimizer ------------------------------------------------------------------

@dataclass
class AdadeltaState:
    """Per-parameter running averages of squared gradients and updates."""

    square_avg: dict[str, np.ndarray] = field(default_factory=dict)
    acc_delta: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_model(cls, model: BladeModel) -> "AdadeltaState":
        state = cls()
        for name, arr in model_arrays(model):
            state.square_avg[name] = np.zeros_like(arr)
            state.acc_delta[name] = np.zeros_like(arr)
        return state


def adadelta_step(
    model: BladeModel,
    grads: GradientSet,
    state: AdadeltaState,
    rho: float = 0.95,
    eps: float = 1e-6,
    lr: float = 1.0,
) -> None:
    """In-place accumulator update and parameter step.

    square_avg <- rho*square_avg + (1-rho)*g^2
    delta      <- -sqrt(acc_delta + eps)/sqrt(square_avg + eps) * g
    param      <- param + lr*delta
    acc_delta  <- rho*acc_delta + (1-rho)*delta^2
    """
    params = dict(model_arrays(model))
    for name, g in grads.named_arrays():
        sq = state.square_avg[name]
        acc = state.acc_delta[name]
        sq *= rho
        sq += (1.0 - rho) * g * g
        delta = -np.sqrt(acc + eps) / np.sqrt(sq + eps) * g
        if not np.all(np.isfinite(delta)):
            raise FloatingPointError(f"non-finite update for {name}")
        params[name] += lr * delta
        acc *= rho
        acc += (1.0 - rho) * delta * delta


# --- training loop ----------------------------------------------------------------

@dataclass
class EpochRecord:
    epoch: int
    loss: float
    dev_metric: float
    wall_ms: int


@dataclass
class TrainResult:
    model: BladeModel
    best_epoch: int
    best_metric: float
    log: list[EpochRecord]


def dev_metric_value(
    model: BladeModel, dev: list[Prepared], metric: str
) -> float:
    preds = predict_corpus(model, dev)
    sent_pred = [p.sentence_pred for p in preds]
    sent_gold = [p.sentence_label for p in dev]
    if metric == "accuracy":
        return metrics.accuracy(sent_pred, sent_gold)
    if metric == "sentence-f1":
        gold = np.asarray(sent_gold)
        metrics.warn_if_no_positive_gold(gold, "dev sentence F1")
        return metrics.prf(sent_pred, sent_gold, beta=1.0).fscore
    # token-f05
    tok_pred = []
    tok_gold = []
    for prep, pred in zip(dev, preds):
        if prep.word_labels is None:
            raise ValueError("token-level dev metric needs token labels")
        tok_pred.append(pred.word_labels)
        tok_gold.append(prep.word_labels)
    flat = np.concatenate(tok_gold) if tok_gold else np.zeros(0, dtype=np.int64)
    metrics.warn_if_no_positive_gold(flat, "dev token F0.5")
    return metrics.prf(tok_pred, tok_gold, beta=0.5).fscore


def train(
    model: BladeModel,
    train_set: list[Prepared],
    dev_set: list[Prepared],
    config: TrainConfig,
) -> TrainResult:
    """Epoch loop with seeded shuffling and best-dev-epoch selection.

    Returns the checkpoint of the epoch with the highest dev metric
    (earliest on ties); with ``max_epochs=0`` the initial model comes
    back unchanged. Identical seeds and inputs reproduce the trajectory
    bit for bit.
    """
    if not dev_set:
        raise ValueError("training requires a non-empty dev set")
    rng = np.random.default_rng(config.seed)
    state = AdadeltaState.for_model(model)
    best_model = copy_model(model)
    best_metric = -np.inf
    best_epoch = 0
    log: list[EpochRecord] = []
    n = len(train_set)
    for epoch in range(1, config.max_epochs + 1):
        started = time.monotonic()
        order = rng.permutation(n)
        epoch_loss = 0.0
        batches = 0
        for lo in range(0, n, config.batch_size):
            batch = [train_set[i] for i in order[lo : lo + config.batch_size]]
            loss, grads, _ = gradients(model, batch, config, rng=rng)
            adadelta_step(model, grads, state, config.rho, config.eps, config.lr)
            epoch_loss += loss
            batches += 1
        epoch_loss /= max(batches, 1)
        metric = dev_metric_value(model, dev_set, config.dev_metric)
        wall_ms = int((time.monotonic() - started) * 1000)
        log.append(EpochRecord(epoch, epoch_loss, metric, wall_ms))
        if metric > best_metric:
            best_metric = metric
            best_epoch = epoch
            best_model = copy_model(model)
    if config.max_epochs == 0:
        best_metric = np.nan
    return TrainResult(
        model=best_model, best_epoch=best_epoch, best_metric=best_metric, log=log
    )


# --- finite-difference oracle ------------------------------------------------------

def finite_difference_gradients(
    model: BladeModel,
    batch: list[Prepared],
    config: TrainConfig,
    dropout_masks: list[np.ndarray | None],
    epsilon: float = 1e-5,
) -> GradientSet:
    """Central differences of the batch loss, parameter by parameter."""
    fd = GradientSet.zeros_like(model)
    fd_arrays = dict(fd.named_arrays())
    for name, param in model_arrays(model):
        target = fd_arrays[name]
        flat_p = param.reshape(-1)
        flat_t = target.reshape(-1)
        for i in range(flat_p.shape[0]):
            original = flat_p[i]
            flat_p[i] = original + epsilon
            hi = batch_loss(model, batch, config, dropout_masks)
            flat_p[i] = original - epsilon
            lo = batch_loss(model, batch, config, dropout_masks)
            flat_p[i] = original
            flat_t[i] = (hi - lo) / (2.0 * epsilon)
    return fd
