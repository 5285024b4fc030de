"""Zero-shot token labeling: train on sentence labels, read off token labels.

The task is synthetic and fully controlled: sentences over a 200-word
vocabulary are positive exactly when they contain words from a 10-word
trigger set, so trigger membership is the true token label. The model
never sees a token label; after sentence-level training, thresholding
each word's combined contribution score recovers the triggers.
"""

from blade.data import build_vocab
from blade.metrics import baselines, prf
from blade.model import create_model
from blade.pipeline import prepare_corpus, predict_corpus
from blade.toydata import make_trigger_corpus
from blade.train import TrainConfig, train

full = make_trigger_corpus(2000, seed=11)
train_set, dev_set, test_set = full[:1400], full[1400:1700], full[1700:]
vocab = build_vocab(train_set, 250)

model = create_model(len(vocab), word_dim=32, filter_counts={1: 50}, seed=1)
config = TrainConfig(
    loss="sentence-ce",
    batch_size=50,
    max_epochs=20,
    dropout=0.5,
    dev_metric="sentence-f1",
    seed=3,
)
prepared = {
    name: prepare_corpus(part, vocab, min_length=1)
    for name, part in (("train", train_set), ("dev", dev_set), ("test", test_set))
}

result = train(model, prepared["train"], prepared["dev"], config)
print(f"best epoch {result.best_epoch}, dev sentence F1 {result.best_metric:.2f}")

preds = predict_corpus(result.model, prepared["test"])
sent = prf([p.sentence_pred for p in preds],
           [q.sentence_label for q in prepared["test"]])
tok = prf([p.word_labels for p in preds],
          [q.word_labels for q in prepared["test"]])
print(f"held-out sentence F1: {sent.fscore:.2f}")
print(f"zero-shot token   {tok.row()}")

base = baselines(
    [q.sentence_label for q in prepared["test"]],
    [q.word_labels for q in prepared["test"]],
    seed=0,
)
print(f"random token      {base.random_token.row()}")
print(f"majority token    {base.majority_token.row()}")

print("\na few labeled sentences (marked words were predicted positive):")
for prep, pred in list(zip(prepared["test"], preds))[:5]:
    shown = [
        f"[{t}]" if y else t
        for t, y in zip(prep.instance.tokens, pred.word_labels)
    ]
    print("  " + " ".join(shown))
