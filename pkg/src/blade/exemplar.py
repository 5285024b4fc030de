"""Token fingerprint database with exact nearest-neighbor lookup.

Every real word of every instance contributes one record: the word's
fingerprint vector under a fixed checkpoint, the model's token and
sentence predictions, and whatever gold labels are known. At inference a
test token's fingerprint is matched to its closest stored vector by
Euclidean distance (exact, never approximate), and conjunctive decision
rules decide whether a positive test prediction is admitted.

Records can come from the training set or be appended later from data
the model never trained on; the checkpoint fingerprint in the header
pins every record to the parameters that produced it.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass

import numpy as np

from .model import BladeModel, exemplar_vectors, forward, label_tokens, predict_sentence
from .model import decompose, model_fingerprint
from .pipeline import Prepared

DB_MAGIC = b"BLEX"
DB_VERSION = 1
UNKNOWN = -1
TRAIN_TAG = "train"

RULE_KINDS = ("exa", "exag", "exat")


def _record_dtype(m: int) -> np.dtype:
    return np.dtype(
        [
            ("id_hash", "<u8"),
            ("word_index", "<u4"),
            ("token_pred", "i1"),
            ("sent_pred", "i1"),
            ("gold_sentence", "i1"),
            ("gold_token", "i1"),
            ("tag_id", "<u2"),
            ("vector", "<f4", (m,)),
        ],
        align=False,
    )


def id_hash(instance_id: str) -> int:
    digest = hashlib.sha256(instance_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class DecisionRule:
    """Conjunctive admission rule over the matched exemplar.

    ``exa`` requires the exemplar's own token prediction to be positive;
    ``exag`` additionally requires a positive gold sentence label, and
    ``exat`` a positive gold token label. Unknown gold fields fail their
    condition. An optional distance cap rejects matches farther away.
    """

    kind: str
    distance_cap: float | None = None

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown decision rule {self.kind!r}")


class ExemplarDatabase:
    """Array-backed record store plus display sidecar data."""

    def __init__(self, m: int, fingerprint: bytes):
        if len(fingerprint) != 32:
            raise ValueError("checkpoint fingerprint must be 32 bytes")
        self.m = m
        self.fingerprint = fingerprint
        self.records = np.zeros(0, dtype=_record_dtype(m))
        self.tags: list[str] = [TRAIN_TAG]
        self.texts: dict[int, str] = {}
        self._dense: np.ndarray | None = None

    def __len__(self) -> int:
        return int(self.records.shape[0])

    def tag_id(self, name: str) -> int:
        if name in self.tags:
            return self.tags.index(name)
        self.tags.append(name)
        if len(self.tags) > 0xFFFF:
            raise ValueError("too many source tags")
        return len(self.tags) - 1

    def append(self, rows: np.ndarray) -> None:
        self.records = np.concatenate([self.records, rows])
        self._dense = None

    def vectors(self) -> np.ndarray:
        return self.records["vector"]

    def vectors64(self) -> np.ndarray:
        """Query-side float64 view, cached between appends.

        Label edits never touch vectors, so the cache survives them.
        """
        if self._dense is None or self._dense.shape[0] != len(self):
            self._dense = self.records["vector"].astype(np.float64)
        return self._dense


def _display_text(tokens: list[str]) -> str:
    # the sidecar is line-delimited; keep each entry on one line
    return " ".join(tokens).replace("\n", " ")


def _rows_for_instance(
    model: BladeModel, prep: Prepared, tag_id: int, m: int
) -> np.ndarray:
    trace = forward(model, prep.indexed, prep.external_rows, mode="infer")
    decomp = decompose(trace, model)
    token_preds = label_tokens(decomp, 0.0)
    sent_pred = predict_sentence(trace)
    vectors = exemplar_vectors(trace, model)
    inst = prep.instance
    n_words = len(prep.indexed.word_spans)
    rows = np.zeros(n_words, dtype=_record_dtype(m))
    rows["id_hash"] = id_hash(inst.id)
    rows["word_index"] = np.arange(n_words)
    rows["token_pred"] = token_preds
    rows["sent_pred"] = sent_pred
    rows["gold_sentence"] = inst.sentence_label
    if prep.word_labels is not None:
        rows["gold_token"] = prep.word_labels
    else:
        rows["gold_token"] = UNKNOWN
    rows["tag_id"] = tag_id
    rows["vector"] = vectors.astype(np.float32)
    return rows


def build_db(
    model: BladeModel,
    prepared: list[Prepared],
    fingerprint: bytes | None = None,
) -> ExemplarDatabase:
    """Fingerprint every real word of a corpus under the model.

    Requires an all-width-1 filter bank. Predictions are taken at the
    default decision boundary; rebuilding with the same checkpoint and
    corpus is byte-deterministic.
    """
    if not model.is_unit_width():
        raise ValueError("exemplar databases require an all-width-1 model")
    if fingerprint is None:
        fingerprint = model_fingerprint(model)
    db = ExemplarDatabase(m=model.num_filters, fingerprint=fingerprint)
    for prep in prepared:
        rows = _rows_for_instance(model, prep, tag_id=0, m=db.m)
        db.append(rows)
        db.texts[id_hash(prep.instance.id)] = _display_text(prep.instance.tokens)
    return db


def augment_db(
    db: ExemplarDatabase,
    model: BladeModel,
    prepared: list[Prepared],
    tag: str,
    fingerprint: bytes | None = None,
) -> None:
    """Append records for unseen data without touching existing ones.

    The model must be the checkpoint the database was built from; the
    appended records carry the ``augmented:<tag>`` source tag.
    """
    if fingerprint is None:
        fingerprint = model_fingerprint(model)
    if fingerprint != db.fingerprint:
        raise ValueError("checkpoint fingerprint does not match the database")
    tag_id = db.tag_id(f"augmented:{tag}")
    for prep in prepared:
        rows = _rows_for_instance(model, prep, tag_id=tag_id, m=db.m)
        db.append(rows)
        db.texts[id_hash(prep.instance.id)] = _display_text(prep.instance.tokens)


def edit_label(db: ExemplarDatabase, index: int, fld: str, value: int) -> None:
    """Overwrite one gold field of one record in place."""
    if fld not in ("gold_sentence", "gold_token"):
        raise ValueError(f"cannot edit field {fld!r}")
    if value not in (0, 1, UNKNOWN):
        raise ValueError(f"gold value must be 0, 1, or {UNKNOWN} (unknown)")
    if not 0 <= index < len(db):
        raise IndexError(f"record index {index} out of range 0..{len(db) - 1}")
    db.records[fld][index] = value


@dataclass
class Match:
    """Result of one nearest-neighbor query."""

    index: int
    distance: float
    token_pred: int
    sent_pred: int
    gold_sentence: int
    gold_token: int
    tag: str
    instance_id_hash: int
    word_index: int
    text: str | None


def _match_from_index(db: ExemplarDatabase, idx: int, dist: float) -> Match:
    rec = db.records[idx]
    return Match(
        index=idx,
        distance=dist,
        token_pred=int(rec["token_pred"]),
        sent_pred=int(rec["sent_pred"]),
        gold_sentence=int(rec["gold_sentence"]),
        gold_token=int(rec["gold_token"]),
        tag=db.tags[int(rec["tag_id"])],
        instance_id_hash=int(rec["id_hash"]),
        word_index=int(rec["word_index"]),
        text=db.texts.get(int(rec["id_hash"])),
    )


def nearest(db: ExemplarDatabase, query: np.ndarray, method: str = "scan") -> Match:
    """Exact Euclidean nearest record; ties go to the lowest index.

    ``scan`` accumulates squared differences in 64-bit arithmetic.
    ``norms`` uses the expanded-norm identity to shortlist candidates and
    then re-ranks the shortlist with the exact difference-based
    distances, so its answer (including tie resolution) always equals the
    plain scan's.
    """
    if len(db) == 0:
        raise ValueError("nearest-neighbor query on an empty database")
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (db.m,):
        raise ValueError(f"query shape {q.shape} does not match dimension {db.m}")
    vectors = db.vectors64()
    if method == "scan":
        d2 = ((vectors - q) ** 2).sum(axis=1)
        idx = int(np.argmin(d2))
        return _match_from_index(db, idx, float(np.sqrt(d2[idx])))
    if method == "norms":
        row_norms = (vectors * vectors).sum(axis=1)
        q_norm = float((q * q).sum())
        approx = row_norms + q_norm - 2.0 * (vectors @ q)
        slack = 1e-8 * max(float(row_norms.max()), q_norm, 1.0)
        shortlist = np.flatnonzero(approx <= approx.min() + 2.0 * slack)
        d2 = ((vectors[shortlist] - q) ** 2).sum(axis=1)
        k = int(np.argmin(d2))
        return _match_from_index(db, int(shortlist[k]), float(np.sqrt(d2[k])))
    raise ValueError(f"unknown search method {method!r}")


def apply_rule(test_token_pred: int, match: Match, rule: DecisionRule) -> int:
    """Admit or reject a positive test prediction via its matched exemplar."""
    if test_token_pred == 0:
        return 0
    if rule.distance_cap is not None and match.distance > rule.distance_cap:
        return 0
    if match.token_pred != 1:
        return 0
    if rule.kind == "exag" and match.gold_sentence != 1:
        return 0
    if rule.kind == "exat" and match.gold_token != 1:
        return 0
    return 1


def audited_labels(
    db: ExemplarDatabase,
    model: BladeModel,
    prep: Prepared,
    rule: DecisionRule,
    offset: float = 0.0,
    method: str = "scan",
) -> tuple[np.ndarray, list[Match | None]]:
    """Token labels after the decision rule, with the consulted matches.

    Only raw positives consult the database; other positions carry None.
    """
    trace = forward(model, prep.indexed, prep.external_rows, mode="infer")
    decomp = decompose(trace, model)
    raw = label_tokens(decomp, offset)
    vectors = exemplar_vectors(trace, model)
    admitted = raw.copy()
    matches: list[Match | None] = [None] * len(raw)
    for w in np.flatnonzero(raw == 1):
        match = nearest(db, vectors[w], method=method)
        matches[w] = match
        admitted[w] = apply_rule(1, match, rule)
    return admitted, matches


# --- persistence ----------------------------------------------------------------

def save_db(db: ExemplarDatabase, path) -> None:
    """Write header and packed records, then atomically swap into place."""
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(DB_MAGIC)
        fh.write(struct.pack("<I", DB_VERSION))
        fh.write(struct.pack("<I", db.m))
        fh.write(db.fingerprint)
        fh.write(struct.pack("<Q", len(db)))
        fh.write(db.records.tobytes())
    os.replace(tmp, path)
    tmp = str(path) + ".texts.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for h in sorted(db.texts):
            fh.write(f"{h:016x}\t{db.texts[h]}\n")
    os.replace(tmp, str(path) + ".texts")
    tmp = str(path) + ".tags.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for i, tag in enumerate(db.tags):
            fh.write(f"{i}\t{tag}\n")
    os.replace(tmp, str(path) + ".tags")


def load_db(path) -> ExemplarDatabase:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != DB_MAGIC:
        raise ValueError(f"{path}: bad database magic {raw[:4]!r}")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != DB_VERSION:
        raise ValueError(f"{path}: unsupported database version {version}")
    (m,) = struct.unpack_from("<I", raw, 8)
    fingerprint = raw[12:44]
    (count,) = struct.unpack_from("<Q", raw, 44)
    dtype = _record_dtype(m)
    expected = 52 + count * dtype.itemsize
    if len(raw) != expected:
        raise ValueError(
            f"{path}: file length {len(raw)} != expected {expected}"
        )
    db = ExemplarDatabase(m=m, fingerprint=fingerprint)
    db.records = np.frombuffer(raw, dtype=dtype, count=count, offset=52).copy()
    texts_path = str(path) + ".texts"
    if os.path.exists(texts_path):
        with open(texts_path, "r", encoding="utf-8") as fh:
            for line in fh:
                key, _, text = line.rstrip("\n").partition("\t")
                db.texts[int(key, 16)] = text
    tags_path = str(path) + ".tags"
    if os.path.exists(tags_path):
        tags = []
        with open(tags_path, "r", encoding="utf-8") as fh:
            for line in fh:
                _, _, tag = line.rstrip("\n").partition("\t")
                tags.append(tag)
        if tags:
            db.tags = tags
    return db
