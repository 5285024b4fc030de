"""Comparative feature extraction: which phrases define each class?

Summing bias-corrected token contributions over sliding windows scores
every ngram for each class; summing over a whole instance ranks the
instances themselves. On the trigger task the top positive unigrams
should be exactly the trigger words, and the most positive sentences
the ones that stack several triggers.
"""

from blade.data import build_vocab
from blade.features import ngram_scores, report, score_corpus, sentence_scores
from blade.model import create_model
from blade.pipeline import prepare_corpus
from blade.toydata import make_trigger_corpus
from blade.train import TrainConfig, train

full = make_trigger_corpus(1500, seed=41)
train_set, dev_set = full[:1200], full[1200:]
vocab = build_vocab(train_set, 250)
model = create_model(len(vocab), word_dim=32, filter_counts={1: 50}, seed=2)
config = TrainConfig(loss="sentence-ce", batch_size=50, max_epochs=10,
                     dropout=0.5, dev_metric="sentence-f1", seed=7)
detector = train(model, prepare_corpus(train_set, vocab, 1),
                 prepare_corpus(dev_set, vocab, 1), config).model

scored = score_corpus(detector, prepare_corpus(dev_set, vocab, 1))

print("top positive unigrams (total score):")
for item in ngram_scores(scored, cls=1, z=1, mode="total")[:10]:
    print(f"  {item.total:+9.3f}  n={item.count:<3} {item.text}")

print("\ntop positive bigrams (mean score):")
for item in ngram_scores(scored, cls=1, z=2, mode="mean")[:5]:
    print(f"  {item.mean:+9.3f}  n={item.count:<3} {item.text}")

print("\nmost positive instances (length-normalized):")
for s in sentence_scores(scored, cls=1, normalize=True)[:3]:
    tokens = next(i.tokens for i in scored if i.instance_id == s.instance_id)
    print(f"  {s.normalized:+7.3f} gold={s.gold} pred={s.predicted} "
          f"{' '.join(tokens)}")

text, rows = report(scored, zs=(1, 2), top_k=5)
print(f"\nfull report: {len(text.splitlines())} lines, "
      f"{len(rows)} machine-readable rows")
