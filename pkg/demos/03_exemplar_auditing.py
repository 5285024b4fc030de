"""Exemplar auditing: trace each positive token back to training data.

Every word of the training set is fingerprinted by its slice through all
feature maps and stored in a database. At inference, a positive token
consults its Euclidean-nearest training fingerprint, and conjunctive
rules decide whether the prediction stands. The second half augments the
database with benign sentences from a new domain the model never trained
on: requiring the matched exemplar to come from a positive sentence then
suppresses the false alarms the raw model raises there.
"""

from blade.data import build_vocab
from blade.embeddings import load_embeddings, stub_export
from blade.exemplar import DecisionRule, audited_labels, augment_db, build_db
from blade.metrics import prf
from blade.model import create_model
from blade.pipeline import prepare_corpus, predict_corpus
from blade.toydata import make_benign_domain_corpus, make_trigger_corpus
from blade.train import TrainConfig, train

import tempfile, os

workdir = tempfile.mkdtemp(prefix="exemplar-demo-")
DIM = 24

train_set = make_trigger_corpus(1300, seed=21)
dev_set = make_trigger_corpus(300, seed=24)
benign_pool = make_benign_domain_corpus(400, seed=22)
benign_unseen = make_benign_domain_corpus(200, seed=23)
vocab = build_vocab(train_set, 250)


def prep(corpus, name):
    path = os.path.join(workdir, f"{name}.blem")
    stub_export(corpus, DIM, path)
    return prepare_corpus(corpus, vocab, 1, embeddings=load_embeddings(path))


prepared_train = prep(train_set, "train")
prepared_dev = prep(dev_set, "dev")
prepared_pool = prep(benign_pool, "pool")
prepared_unseen = prep(benign_unseen, "unseen")

model = create_model(len(vocab), word_dim=32, filter_counts={1: 50},
                     external_dim=DIM, seed=5)
config = TrainConfig(loss="sentence-ce", batch_size=50, max_epochs=12,
                     dropout=0.5, dev_metric="sentence-f1", seed=9)
detector = train(model, prepared_train, prepared_dev, config).model

db = build_db(detector, prepared_train)
print(f"database built from training set: {len(db)} word fingerprints")

# in-domain: the decision rules trade recall for precision
gold = [p.word_labels for p in prepared_dev]
raw = [p.word_labels for p in predict_corpus(detector, prepared_dev)]
for kind in ("exa", "exag", "exat"):
    admitted = [
        audited_labels(db, detector, p, DecisionRule(kind=kind))[0]
        for p in prepared_dev
    ]
    print(f"  {kind:>4}: {prf(admitted, gold, 0.5).row()}")
print(f"   raw: {prf(raw, gold, 0.5).row()}")

# show one audited sentence
for p in prepared_dev:
    admitted, matches = audited_labels(db, detector, p, DecisionRule(kind="exa"))
    hits = [(w, m) for w, m in enumerate(matches) if m is not None]
    if hits:
        print("\naudit of:", " ".join(p.instance.tokens))
        for w, m in hits:
            print(f"  token {p.instance.tokens[w]!r} -> exemplar "
                  f"{m.text!r} (word {m.word_index}, distance {m.distance:.3f}, "
                  f"exemplar pred {m.token_pred}, admitted {admitted[w]})")
        break

# out-of-domain: raw model false-positives on benign trigger usages
raw_fp = sum(int(p.word_labels.sum())
             for p in predict_corpus(detector, prepared_unseen))
augment_db(db, detector, prepared_pool, tag="news")
print(f"\naugmented with {len(prepared_pool)} benign new-domain sentences "
      f"-> {len(db)} records")
exag_fp = sum(
    int(audited_labels(db, detector, p, DecisionRule(kind="exag"))[0].sum())
    for p in prepared_unseen
)
print(f"false positives on unseen new-domain text: raw {raw_fp}, "
      f"with the positive-sentence rule {exag_fp}")
