"""Walk through the forward pass and the per-token decomposition.

A tiny hand-built model makes every number inspectable: two width-1
filters over a 2-d embedding space, an identity linear head, and a
three-word sentence. The pooled vector keeps one surviving window per
filter, and crediting each W[c,m]*g[m] term back to that window turns
the sentence classifier into a token labeler.
"""

import numpy as np

from blade.data import LabeledInstance, Vocabulary, index_instance
from blade.model import (
    BladeModel,
    FilterGroup,
    decompose,
    forward,
    label_tokens,
    predict_sentence,
)

vocab = Vocabulary(index={"<pad>": 0, "<unk>": 1, "good": 2, "not": 3, "bad": 4})
sentence = LabeledInstance(id="demo", tokens=["good", "not", "bad"], sentence_label=0)

embeddings = np.zeros((5, 2))
embeddings[2] = [1.0, 0.0]   # "good"
embeddings[3] = [0.0, 1.0]   # "not"
embeddings[4] = [1.0, 1.0]   # "bad"

model = BladeModel(
    embeddings=embeddings,
    external_dim=0,
    groups=[
        FilterGroup(
            width=1,
            weights=np.array([[[1.0, 0.0]], [[0.0, 1.0]]]),
            bias=np.zeros(2),
        )
    ],
    linear_w=np.eye(2),
    linear_b=np.zeros(2),
)

indexed = index_instance(sentence, vocab, min_length=1)
trace = forward(model, indexed)

print("tokens:          ", sentence.tokens)
print("feature maps h:  ")
print(trace.feature_maps[0])
print("pooled g:        ", trace.pooled_raw)
print("surviving index: ", trace.argmax)
print("logits:          ", trace.logits)
print("probabilities:   ", trace.probs)
print("sentence class:  ", predict_sentence(trace))

dec = decompose(trace, model)
print("\nper-token scores (negative / positive / combined):")
for w, tok in enumerate(sentence.tokens):
    print(f"  {tok:>6}: {dec.word_neg[w]:+.3f} {dec.word_pos[w]:+.3f} "
          f"{dec.word_combined[w]:+.3f}")
print("labels at boundary 0:   ", label_tokens(dec, 0.0))
print("labels at boundary 1.5: ", label_tokens(dec, 1.5))

# the decomposition telescopes back to the logits
for c, s in ((0, dec.neg), (1, dec.pos)):
    recovered = (s - model.linear_b[c]).sum() + model.linear_b[c]
    print(f"sum of class-{c} scores recovers logit: "
          f"{recovered:.6f} == {trace.logits[c]:.6f}")
