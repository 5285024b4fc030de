"""Detection-constrained selection among candidate completions.

Each group shares a human-written prefix and offers 50 candidate
completions, half of which contain trigger tokens the detector was
trained to flag. Picking the candidate with the fewest detections
(ties: closest length to the original, then a seeded coin) collapses
the detection rate relative to choosing at random, which is exactly
what makes a detector a poor filter once the generator can sample
against it, and a useful mask for guiding generation.
"""

import numpy as np

from blade.data import build_vocab
from blade.model import create_model
from blade.pipeline import prepare_corpus
from blade.rerank import group_candidates, rerank, rerank_eval
from blade.toydata import make_candidate_groups, make_trigger_corpus
from blade.train import TrainConfig, train

full = make_trigger_corpus(1500, seed=41)
train_set, dev_set = full[:1200], full[1200:]
vocab = build_vocab(train_set, 250)
model = create_model(len(vocab), word_dim=32, filter_counts={1: 50}, seed=2)
config = TrainConfig(loss="sentence-ce", batch_size=50, max_epochs=10,
                     dropout=0.5, dev_metric="sentence-f1", seed=7)
detector = train(model, prepare_corpus(train_set, vocab, 1),
                 prepare_corpus(dev_set, vocab, 1), config).model

corpus = make_candidate_groups(30, candidates_per_group=50, seed=33)
groups = group_candidates(prepare_corpus(corpus, vocab, 1))
selections = rerank(detector, groups, seed=5)

mean_selected = np.mean([s.detections for s in selections])
mean_random = np.mean([s.pool_mean for s in selections])
print(f"groups: {len(groups)}, candidates per group: "
      f"{groups[0].candidates and len(groups[0].candidates)}")
print(f"mean detections if choosing at random: {mean_random:.3f}")
print(f"mean detections after re-ranking:      {mean_selected:.3f}")

outcome = rerank_eval(selections)
print(f"token-level score of the chosen candidates: {outcome.prf.row()}")

print("\nper-group view (first 5):")
for sel in selections[:5]:
    print(f"  {sel.group_id}: chose {sel.chosen_id} with {sel.detections} "
          f"detections (pool mean {sel.pool_mean:.2f}, size {sel.pool_size})")
