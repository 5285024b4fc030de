"""From zero supervision to full supervision on the same architecture.

The same classifier supports a ladder of label budgets:

  1. zero-shot: sentence labels only, token labels read off the
     decomposition at the default boundary;
  2. tuned boundary: a small token-labeled set picks one scalar offset;
  3. token fine-tuning: per-token cross-entropy on the combined scores,
     initialized from the zero-shot checkpoint;
  4. min-max fine-tuning: sentence labels again, but pushing each
     sentence's extreme scores apart (filters only, head frozen).

To make the differences visible at toy scale, the corpus is noisier than
in the other demos: a quarter of each trigger's occurrences also appear
in negative sentences, so precision is no longer free.
"""

import numpy as np

from blade.data import LabeledInstance, build_vocab
from blade.metrics import prf, tune_offset
from blade.model import copy_model, create_model
from blade.pipeline import prepare_corpus, predict_corpus
from blade.toydata import trigger_vocabulary
from blade.train import TrainConfig, train


def noisy_trigger_corpus(size, seed):
    """Trigger task variant where triggers sometimes occur benignly."""
    fillers, triggers = trigger_vocabulary()
    rng = np.random.default_rng(seed)
    out = []
    for i in range(size):
        n = int(rng.integers(5, 13))
        tokens = [fillers[int(j)] for j in rng.integers(0, len(fillers), n)]
        labels = [0] * n
        positive = rng.random() < 0.5
        if positive:
            k = int(rng.integers(1, 4))
            types = rng.choice(len(triggers), size=min(k, n), replace=False)
            spots = rng.choice(n, size=min(k, n), replace=False)
            for t, p in zip(types, spots):
                tokens[int(p)] = triggers[int(t)]
                labels[int(p)] = 1
        elif rng.random() < 0.25:
            # benign trigger occurrence in a negative sentence
            tokens[int(rng.integers(0, n))] = triggers[int(rng.integers(0, 10))]
        out.append(LabeledInstance(id=f"n{i}", tokens=tokens,
                                   sentence_label=int(positive),
                                   token_labels=labels))
    return out


full = noisy_trigger_corpus(2400, seed=51)
train_set, dev_set, test_set = full[:1700], full[1700:2000], full[2000:]
vocab = build_vocab(train_set, 250)
prep = {
    "train": prepare_corpus(train_set, vocab, 1),
    "dev": prepare_corpus(dev_set, vocab, 1),
    "test": prepare_corpus(test_set, vocab, 1),
}
gold = [p.word_labels for p in prep["test"]]


def token_f05(model, offset=0.0):
    preds = predict_corpus(model, prep["test"], offset)
    return prf([p.word_labels for p in preds], gold, beta=0.5)


# 1. zero-shot
base_cfg = TrainConfig(loss="sentence-ce", batch_size=50, max_epochs=15,
                       dropout=0.5, dev_metric="sentence-f1", seed=3)
model = create_model(len(vocab), word_dim=32, filter_counts={1: 50}, seed=1)
zero_shot = train(model, prep["train"], prep["dev"], base_cfg).model
print(f"zero-shot             {token_f05(zero_shot).row()}")

# 2. tuned decision boundary on the labeled dev split
dev_preds = predict_corpus(zero_shot, prep["dev"])
offset = tune_offset(
    [p.decomp.word_combined for p in dev_preds],
    [q.word_labels for q in prep["dev"]],
)
print(f"tuned offset {offset:+.3f}  {token_f05(zero_shot, offset).row()}")

# 3. token-supervised fine-tuning from the zero-shot checkpoint
token_cfg = TrainConfig(loss="token-bce", batch_size=50, max_epochs=8,
                        dropout=0.5, dev_metric="token-f05", seed=4)
supervised = train(copy_model(zero_shot), prep["train"], prep["dev"],
                   token_cfg).model
print(f"token fine-tuned      {token_f05(supervised).row()}")

# 4. min-max fine-tuning (filters only)
mm_cfg = TrainConfig(loss="minmax", batch_size=50, max_epochs=8, dropout=0.5,
                     dev_metric="sentence-f1", seed=5, trainable="cnn-only")
minmax = train(copy_model(zero_shot), prep["train"], prep["dev"], mm_cfg).model
print(f"min-max fine-tuned    {token_f05(minmax).row()}")
