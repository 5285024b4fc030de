"""Command-line entry point for every workflow.

Each subcommand resolves its options from hard defaults, then an optional
``key=value`` config file, then explicit flags (highest precedence), and
writes a run manifest next to every output file it produces. The manifest
records the exact argument vector, the resolved configuration, the seeds,
and content hashes of all inputs and outputs, which is enough to re-run
the command and reproduce the outputs bit for bit. Wall-clock fields in
training logs are masked to zero inside manifest hashes, since timing is
the one intentionally non-reproducible diagnostic.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

from . import __version__
from .data import CorpusFormatError, Vocabulary, build_vocab, load_corpus
from .embeddings import EmbeddingFormatError, load_embeddings
from .exemplar import (
    DecisionRule,
    audited_labels,
    augment_db,
    build_db,
    edit_label,
    load_db,
    save_db,
)
from .features import score_corpus, report as feature_report, write_feature_rows
from .metrics import prf, tune_offset
from .model import load_model, save_model, create_model
from .pipeline import prepare_corpus, predict_corpus
from .rerank import group_candidates, rerank
from .train import TrainConfig, train

USAGE_ERROR, DATA_ERROR, NUMERIC_ERROR = 1, 2, 3


class UsageError(Exception):
    pass


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _canonical_hash(path) -> str:
    """Content hash; training logs are hashed with wall_ms masked to 0."""
    if str(path).endswith(".trainlog.jsonl"):
        h = hashlib.sha256()
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                obj = json.loads(line)
                obj["wall_ms"] = 0
                h.update((json.dumps(obj, sort_keys=True) + "\n").encode())
        return h.hexdigest()
    return _sha256_file(path)


def _atomic_write_text(path, text: str) -> None:
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_manifest(
    command: str,
    argv: list[str],
    resolved: dict,
    inputs: list[str],
    outputs: list[str],
    fingerprints: dict[str, str] | None = None,
    input_hashes: dict[str, str] | None = None,
) -> None:
    """Record the run next to every output it produced.

    ``input_hashes`` carries pre-run digests for inputs the command
    overwrites in place (a database being augmented or edited); all other
    inputs are hashed as they sit on disk.
    """
    input_hashes = input_hashes or {}
    manifest = {
        "command": command,
        "argv": list(argv),
        "config": {k: v for k, v in sorted(resolved.items())},
        "seeds": {"seed": resolved.get("seed")},
        "inputs": [
            {"path": str(p), "sha256": input_hashes.get(str(p), None) or _sha256_file(p)}
            for p in inputs
        ],
        "outputs": [
            {"path": str(p), "sha256": _canonical_hash(p)} for p in outputs
        ],
        "checkpoint_fingerprints": fingerprints or {},
        "version": __version__,
    }
    text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    for out in outputs:
        _atomic_write_text(str(out) + ".manifest.json", text)


# --- option resolution ---------------------------------------------------------

def _read_config_file(path) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def _coerce(value: str, kind):
    if kind is bool:
        low = value.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"cannot parse boolean {value!r}")
    return kind(value)


class Options:
    """Defaults < config file < explicit flags."""

    def __init__(self, args: argparse.Namespace, defaults: dict):
        self._args = vars(args)
        self._defaults = defaults
        config_path = self._args.get("config")
        self._file = _read_config_file(config_path) if config_path else {}
        self.resolved: dict = {}

    def get(self, name: str, kind=str, required: bool = False):
        cli = self._args.get(name.replace("-", "_"))
        if cli is not None:
            value = cli
        elif name in self._file:
            value = _coerce(self._file[name], kind)
        elif name in self._defaults:
            value = self._defaults[name]
        elif required:
            raise UsageError(f"missing required option --{name}")
        else:
            value = None
        self.resolved[name] = value
        return value


def _parse_int_list(text: str) -> list[int]:
    return [int(part) for part in str(text).split(",") if part != ""]


# --- subcommand implementations -----------------------------------------------

def _load_optional_embeddings(path):
    return load_embeddings(path) if path else None


def _prepare(corpus, vocab, model, embeddings, max_wp):
    return prepare_corpus(
        corpus, vocab, min_length=model.max_width, embeddings=embeddings,
        max_wordpieces=max_wp,
    )


def _cmd_train(args, argv, mode: str) -> int:
    defaults = {
        "loss": {"train": "sentence-ce", "finetune-tokens": "token-bce",
                 "finetune-minmax": "minmax"}[mode],
        "dev-metric": {"train": "sentence-f1", "finetune-tokens": "token-f05",
                       "finetune-minmax": "sentence-f1"}[mode],
        "trainable": "cnn-only" if mode == "finetune-minmax" else "full",
        "epochs": 20, "batch-size": 50, "dropout": 0.5, "seed": 0,
        "vocab-size": 7500, "word-dim": 300, "widths": "3,4,5", "filters": "100",
        "max-wordpieces": 50, "threads": 1, "filter-bias": True,
        "external-dim": 0, "init-seed": 0,
    }
    opt = Options(args, defaults)
    train_path = opt.get("train", required=True)
    dev_path = opt.get("dev", required=True)
    out_path = opt.get("out", required=True)
    emb_path = opt.get("embeddings")
    dev_emb_path = opt.get("dev-embeddings")
    seed = opt.get("seed", int)
    epochs = opt.get("epochs", int)
    batch = opt.get("batch-size", int)
    dropout = opt.get("dropout", float)
    loss = opt.get("loss")
    dev_metric = opt.get("dev-metric")
    trainable = opt.get("trainable")
    max_wp = opt.get("max-wordpieces", int)
    filter_bias = opt.get("filter-bias", bool)
    opt.get("threads", int)

    corpus = load_corpus(train_path)
    dev = load_corpus(dev_path)
    embeddings = _load_optional_embeddings(emb_path)
    dev_embeddings = _load_optional_embeddings(dev_emb_path)
    fingerprints = {}

    if mode == "train":
        widths = _parse_int_list(opt.get("widths"))
        filters = _parse_int_list(opt.get("filters"))
        if len(filters) == 1:
            filters = filters * len(widths)
        if len(filters) != len(widths):
            raise UsageError("--filters must match --widths")
        vocab = build_vocab(corpus, opt.get("vocab-size", int))
        external_dim = embeddings.dim if embeddings is not None else 0
        model = create_model(
            vocab_size=len(vocab),
            word_dim=opt.get("word-dim", int),
            filter_counts=dict(zip(widths, filters)),
            external_dim=external_dim,
            seed=opt.get("init-seed", int),
        )
    else:
        init_path = opt.get("init", required=True)
        model = load_model(init_path)
        vocab = Vocabulary.load(init_path + ".vocab")
        fingerprints[str(init_path)] = _sha256_file(init_path)

    prepared_train = _prepare(corpus, vocab, model, embeddings, max_wp)
    prepared_dev = _prepare(dev, vocab, model, dev_embeddings, max_wp)

    config = TrainConfig(
        loss=loss, batch_size=batch, max_epochs=epochs, dropout=dropout,
        dev_metric=dev_metric, seed=seed, trainable=trainable,
        train_filter_bias=filter_bias,
    )
    result = train(model, prepared_train, prepared_dev, config)

    save_model(result.model, out_path)
    vocab.save(out_path + ".vocab")
    log_path = out_path + ".trainlog.jsonl"
    lines = []
    for rec in result.log:
        lines.append(json.dumps({
            "epoch": rec.epoch, "loss": rec.loss,
            "dev_metric": rec.dev_metric, "wall_ms": rec.wall_ms,
        }))
    _atomic_write_text(log_path, "".join(line + "\n" for line in lines))
    fingerprints[str(out_path)] = _sha256_file(out_path)

    inputs = [p for p in (train_path, dev_path, emb_path, dev_emb_path) if p]
    if mode != "train":
        inputs.append(opt.resolved["init"])
    write_manifest(mode, argv, opt.resolved, inputs,
                   [out_path, out_path + ".vocab", log_path], fingerprints)
    print(f"best epoch {result.best_epoch} ({dev_metric}={result.best_metric:.2f})")
    return 0


def _load_model_and_vocab(opt):
    model_path = opt.get("model", required=True)
    model = load_model(model_path)
    vocab = Vocabulary.load(model_path + ".vocab")
    return model_path, model, vocab


def _cmd_predict(args, argv) -> int:
    opt = Options(args, {"offset": 0.0, "seed": 0, "threads": 1,
                         "max-wordpieces": 50})
    model_path, model, vocab = _load_model_and_vocab(opt)
    input_path = opt.get("input", required=True)
    out_path = opt.get("out", required=True)
    emb_path = opt.get("embeddings")
    offset = opt.get("offset", float)
    max_wp = opt.get("max-wordpieces", int)
    opt.get("seed", int)
    corpus = load_corpus(input_path)
    prepared = _prepare(corpus, vocab, model, _load_optional_embeddings(emb_path), max_wp)
    preds = predict_corpus(model, prepared, offset)
    lines = []
    for pred, prep in zip(preds, prepared):
        lines.append(json.dumps({
            "id": pred.instance_id,
            "sentence_pred": pred.sentence_pred,
            "probs": [float(p) for p in pred.probs],
            "token_labels": [int(v) for v in pred.word_labels],
            "scores": [float(s) for s in pred.decomp.word_combined],
        }))
    _atomic_write_text(out_path, "".join(line + "\n" for line in lines))
    inputs = [p for p in (model_path, model_path + ".vocab", input_path, emb_path) if p]
    write_manifest("predict", argv, opt.resolved, inputs, [out_path],
                   {str(model_path): _sha256_file(model_path)})
    return 0


def _cmd_tune_offset(args, argv) -> int:
    opt = Options(args, {"seed": 0, "threads": 1, "max-wordpieces": 50})
    model_path, model, vocab = _load_model_and_vocab(opt)
    input_path = opt.get("input", required=True)
    out_path = opt.get("out", required=True)
    emb_path = opt.get("embeddings")
    max_wp = opt.get("max-wordpieces", int)
    corpus = load_corpus(input_path)
    prepared = _prepare(corpus, vocab, model, _load_optional_embeddings(emb_path), max_wp)
    scores, gold = [], []
    for prep, pred in zip(prepared, predict_corpus(model, prepared)):
        if prep.word_labels is None:
            raise CorpusFormatError(
                f"instance {prep.instance.id!r} lacks token labels for tuning"
            )
        scores.append(pred.decomp.word_combined)
        gold.append(prep.word_labels)
    delta = tune_offset(scores, gold)
    _atomic_write_text(out_path, f"{delta!r}\n")
    inputs = [p for p in (model_path, model_path + ".vocab", input_path, emb_path) if p]
    write_manifest("tune-offset", argv, opt.resolved, inputs, [out_path],
                   {str(model_path): _sha256_file(model_path)})
    print(f"offset {delta!r}")
    return 0


def _cmd_build_db(args, argv, augment: bool) -> int:
    opt = Options(args, {"seed": 0, "threads": 1, "max-wordpieces": 50,
                         "tag": "extra"})
    model_path, model, vocab = _load_model_and_vocab(opt)
    input_path = opt.get("input", required=True)
    db_path = opt.get("db", required=True)
    emb_path = opt.get("embeddings")
    max_wp = opt.get("max-wordpieces", int)
    corpus = load_corpus(input_path)
    prepared = _prepare(corpus, vocab, model, _load_optional_embeddings(emb_path), max_wp)
    fingerprint = bytes.fromhex(_sha256_file(model_path))
    inputs = [p for p in (model_path, model_path + ".vocab", input_path, emb_path) if p]
    input_hashes = {}
    if augment:
        # the database is consumed and rewritten; pin its pre-run content
        inputs.append(db_path)
        input_hashes[str(db_path)] = _sha256_file(db_path)
        db = load_db(db_path)
        augment_db(db, model, prepared, tag=opt.get("tag"), fingerprint=fingerprint)
    else:
        db = build_db(model, prepared, fingerprint=fingerprint)
    save_db(db, db_path)
    write_manifest("augment-db" if augment else "build-db", argv, opt.resolved,
                   inputs, [db_path], {str(model_path): fingerprint.hex()},
                   input_hashes=input_hashes)
    print(f"database records: {len(db)}")
    return 0


def _cmd_edit_db(args, argv) -> int:
    opt = Options(args, {"seed": 0})
    db_path = opt.get("db", required=True)
    record = opt.get("record", int, required=True)
    field = opt.get("field", required=True)
    value = opt.get("value", int, required=True)
    pre_hash = _sha256_file(db_path)
    db = load_db(db_path)
    edit_label(db, record, field, value)
    save_db(db, db_path)
    write_manifest("edit-db", argv, opt.resolved, [db_path], [db_path], {},
                   input_hashes={str(db_path): pre_hash})
    return 0


def _cmd_audit(args, argv) -> int:
    opt = Options(args, {"offset": 0.0, "seed": 0, "threads": 1,
                         "max-wordpieces": 50, "rule": "exa"})
    model_path, model, vocab = _load_model_and_vocab(opt)
    db_path = opt.get("db", required=True)
    input_path = opt.get("input", required=True)
    out_path = opt.get("out", required=True)
    emb_path = opt.get("embeddings")
    offset = opt.get("offset", float)
    cap = opt.get("distance-cap", float)
    kind = opt.get("rule")
    if kind not in ("exa", "exag", "exat"):
        raise UsageError(f"--rule must be exa, exag, or exat, got {kind!r}")
    rule = DecisionRule(kind=kind, distance_cap=cap)
    max_wp = opt.get("max-wordpieces", int)
    db = load_db(db_path)
    fingerprint = bytes.fromhex(_sha256_file(model_path))
    if fingerprint != db.fingerprint:
        raise CorpusFormatError(
            "model checkpoint does not match the database fingerprint"
        )
    corpus = load_corpus(input_path)
    prepared = _prepare(corpus, vocab, model, _load_optional_embeddings(emb_path), max_wp)
    lines = []
    for prep in prepared:
        admitted, matches = audited_labels(db, model, prep, rule, offset)
        audits = []
        for w, match in enumerate(matches):
            if match is None:
                continue
            audits.append({
                "word_index": w,
                "token": prep.instance.tokens[w],
                "admitted": int(admitted[w]),
                "exemplar": {
                    "text": match.text,
                    "word_index": match.word_index,
                    "token_pred": match.token_pred,
                    "sent_pred": match.sent_pred,
                    "gold_sentence": match.gold_sentence,
                    "gold_token": match.gold_token,
                    "distance": match.distance,
                    "tag": match.tag,
                },
            })
        lines.append(json.dumps({
            "id": prep.instance.id,
            "token_labels": [int(v) for v in admitted],
            "audits": audits,
        }))
    _atomic_write_text(out_path, "".join(line + "\n" for line in lines))
    inputs = [p for p in (model_path, model_path + ".vocab", db_path, input_path,
                          emb_path) if p]
    write_manifest("audit", argv, opt.resolved, inputs, [out_path],
                   {str(model_path): fingerprint.hex()})
    return 0


def _cmd_extract_features(args, argv) -> int:
    opt = Options(args, {"zgram": "1,2,3,4,5", "mode": "total", "top-k": 10,
                         "seed": 0, "threads": 1, "max-wordpieces": 350,
                         "restrict": True, "drop-repeats": False, "offset": 0.0})
    model_path, model, vocab = _load_model_and_vocab(opt)
    input_path = opt.get("input", required=True)
    out_path = opt.get("out", required=True)
    emb_path = opt.get("embeddings")
    zs = tuple(_parse_int_list(opt.get("zgram")))
    mode = opt.get("mode")
    if mode not in ("total", "mean"):
        raise UsageError(f"--mode must be total or mean, got {mode!r}")
    top_k = opt.get("top-k", int)
    restrict = opt.get("restrict", bool)
    drop = opt.get("drop-repeats", bool)
    max_wp = opt.get("max-wordpieces", int)
    if any(z < 1 for z in zs):
        raise UsageError("--zgram sizes must be >= 1")
    corpus = load_corpus(input_path)
    prepared = _prepare(corpus, vocab, model, _load_optional_embeddings(emb_path), max_wp)
    scored = score_corpus(model, prepared, offset=opt.get("offset", float))
    text, rows = feature_report(scored, zs=zs, mode=mode, top_k=top_k,
                                restrict_to_predicted=restrict,
                                drop_repeated_scores=drop)
    _atomic_write_text(out_path, text)
    write_feature_rows(rows, out_path + ".jsonl")
    inputs = [p for p in (model_path, model_path + ".vocab", input_path, emb_path) if p]
    write_manifest("extract-features", argv, opt.resolved, inputs,
                   [out_path, out_path + ".jsonl"],
                   {str(model_path): _sha256_file(model_path)})
    return 0


def _cmd_rerank(args, argv) -> int:
    opt = Options(args, {"seed": 0, "threads": 1, "offset": 0.0,
                         "max-wordpieces": 50})
    model_path, model, vocab = _load_model_and_vocab(opt)
    groups_path = opt.get("groups", required=True)
    out_path = opt.get("out", required=True)
    emb_path = opt.get("embeddings")
    seed = opt.get("seed", int)
    offset = opt.get("offset", float)
    max_wp = opt.get("max-wordpieces", int)
    corpus = load_corpus(groups_path)
    prepared = _prepare(corpus, vocab, model, _load_optional_embeddings(emb_path), max_wp)
    groups = group_candidates(prepared)
    selections = rerank(model, groups, seed=seed, offset=offset)
    lines = []
    for sel in selections:
        lines.append(json.dumps({
            "group_id": sel.group_id,
            "chosen_id": sel.chosen_id,
            "detections": sel.detections,
            "pool_size": sel.pool_size,
            "pool_mean": sel.pool_mean,
        }))
    _atomic_write_text(out_path, "".join(line + "\n" for line in lines))
    inputs = [p for p in (model_path, model_path + ".vocab", groups_path, emb_path) if p]
    write_manifest("rerank", argv, opt.resolved, inputs, [out_path],
                   {str(model_path): _sha256_file(model_path)})
    return 0


def _cmd_eval(args, argv) -> int:
    opt = Options(args, {"beta": 1.0, "level": "both", "seed": 0})
    pred_path = opt.get("pred", required=True)
    gold_path = opt.get("gold", required=True)
    beta = opt.get("beta", float)
    level = opt.get("level")
    if level not in ("sentence", "token", "both"):
        raise UsageError(f"--level must be sentence, token, or both, got {level!r}")
    out_path = opt.get("out")
    pred = load_corpus(pred_path)
    gold = load_corpus(gold_path)
    if len(pred) != len(gold):
        raise CorpusFormatError(
            f"{len(pred)} predictions for {len(gold)} gold instances"
        )
    records = []
    if level in ("sentence", "both"):
        p = [inst.sentence_label for inst in pred]
        g = [inst.sentence_label for inst in gold]
        records.append(("sentence", prf(p, g, beta), prf(p, g, 0.5), prf(p, g, 1.0)))
    if level in ("token", "both"):
        for a, b in zip(pred, gold):
            if a.token_labels is None or b.token_labels is None:
                raise CorpusFormatError(
                    f"instance {a.id!r}: token labels required at token level"
                )
            if len(a.token_labels) != len(b.token_labels):
                raise CorpusFormatError(
                    f"instance {a.id!r}: token label length mismatch"
                )
        p = [a.token_labels for a in pred]
        g = [b.token_labels for b in gold]
        records.append(("token", prf(p, g, beta), prf(p, g, 0.5), prf(p, g, 1.0)))
    lines = []
    for name, main_prf, f05, f1 in records:
        lines.append(json.dumps({
            "split": os.path.basename(str(pred_path)),
            "level": name,
            "precision": main_prf.precision,
            "recall": main_prf.recall,
            "f1": f1.fscore,
            "f05": f05.fscore,
            "beta": beta,
            "fbeta": main_prf.fscore,
            "tp": main_prf.tp, "fp": main_prf.fp,
            "fn": main_prf.fn, "tn": main_prf.tn,
        }))
        print(f"{name}: {main_prf.row()}")
    if out_path:
        _atomic_write_text(out_path, "".join(line + "\n" for line in lines))
        write_manifest("eval", argv, opt.resolved, [pred_path, gold_path],
                       [out_path], {})
    return 0


# --- parser ----------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


_COMMON = [
    ("--config", str), ("--seed", int), ("--threads", int),
    ("--max-wordpieces", int),
]


def _build_parser() -> _Parser:
    parser = _Parser(prog="blade", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def add(name, *opts, flags=()):
        p = sub.add_parser(name)
        for flag, kind in _COMMON + list(opts):
            p.add_argument(flag, type=kind, default=None)
        for flag in flags:
            p.add_argument(flag, action="store_const", const=True, default=None)
        return p

    train_opts = [
        ("--train", str), ("--dev", str), ("--out", str),
        ("--embeddings", str), ("--dev-embeddings", str),
        ("--loss", str), ("--dev-metric", str), ("--epochs", int),
        ("--batch-size", int), ("--dropout", float), ("--vocab-size", int),
        ("--word-dim", int), ("--widths", str), ("--filters", str),
        ("--trainable", str), ("--init-seed", int),
    ]
    add("train", *train_opts, flags=("--no-filter-bias",))
    add("finetune-tokens", *train_opts, ("--init", str))
    add("finetune-minmax", *train_opts, ("--init", str))
    add("predict", ("--model", str), ("--input", str), ("--out", str),
        ("--embeddings", str), ("--offset", float))
    add("tune-offset", ("--model", str), ("--input", str), ("--out", str),
        ("--embeddings", str))
    add("build-db", ("--model", str), ("--input", str), ("--db", str),
        ("--embeddings", str))
    add("augment-db", ("--model", str), ("--input", str), ("--db", str),
        ("--embeddings", str), ("--tag", str))
    add("edit-db", ("--db", str), ("--record", int), ("--field", str),
        ("--value", int))
    add("audit", ("--model", str), ("--db", str), ("--input", str),
        ("--out", str), ("--embeddings", str), ("--rule", str),
        ("--distance-cap", float), ("--offset", float))
    add("extract-features", ("--model", str), ("--input", str), ("--out", str),
        ("--embeddings", str), ("--zgram", str), ("--mode", str),
        ("--top-k", int), ("--offset", float),
        flags=("--no-restrict", "--drop-repeats"))
    add("rerank", ("--model", str), ("--groups", str), ("--out", str),
        ("--embeddings", str), ("--offset", float))
    add("eval", ("--pred", str), ("--gold", str), ("--beta", float),
        ("--level", str), ("--out", str))
    return parser


def dispatch(argv: list[str]) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("a subcommand is required")
    if getattr(args, "no_filter_bias", None):
        args.filter_bias = False
    else:
        args.filter_bias = None
    if getattr(args, "no_restrict", None):
        args.restrict = False
    else:
        args.restrict = None
    args.drop_repeats = getattr(args, "drop_repeats", None)
    handlers = {
        "train": lambda: _cmd_train(args, argv, "train"),
        "finetune-tokens": lambda: _cmd_train(args, argv, "finetune-tokens"),
        "finetune-minmax": lambda: _cmd_train(args, argv, "finetune-minmax"),
        "predict": lambda: _cmd_predict(args, argv),
        "tune-offset": lambda: _cmd_tune_offset(args, argv),
        "build-db": lambda: _cmd_build_db(args, argv, augment=False),
        "augment-db": lambda: _cmd_build_db(args, argv, augment=True),
        "edit-db": lambda: _cmd_edit_db(args, argv),
        "audit": lambda: _cmd_audit(args, argv),
        "extract-features": lambda: _cmd_extract_features(args, argv),
        "rerank": lambda: _cmd_rerank(args, argv),
        "eval": lambda: _cmd_eval(args, argv),
    }
    return handlers[args.command]()


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return dispatch(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (CorpusFormatError, EmbeddingFormatError, FileNotFoundError,
            IndexError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return NUMERIC_ERROR


if __name__ == "__main__":
    sys.exit(main())
