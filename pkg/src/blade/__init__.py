"""Binary sequence labeling via a convolutional decomposition.

Train a convolution + maxpool + linear classifier on sentence labels,
then read per-token class contributions straight out of the pooled
terms: each surviving filter window credits its weight-scaled activation
to the tokens it covers. The same mechanism yields per-token fingerprint
vectors for an exemplar database with exact nearest-neighbor auditing,
ngram-level feature extraction, and detection-constrained re-ranking of
candidate generations.
"""

__version__ = "0.1.0"

from .data import (
    CorpusFormatError,
    IndexedInstance,
    LabeledInstance,
    Vocabulary,
    average_over_fragments,
    build_vocab,
    index_instance,
    load_corpus,
    save_corpus,
)
from .embeddings import EmbeddingSet, load_embeddings, stub_export, write_embeddings
from .exemplar import (
    DecisionRule,
    ExemplarDatabase,
    apply_rule,
    audited_labels,
    augment_db,
    build_db,
    edit_label,
    load_db,
    nearest,
    save_db,
)
from .features import ngram_scores, report, score_corpus, sentence_scores
from .metrics import PRF, accuracy, baselines, fbeta, prf, tune_offset
from .model import (
    BladeModel,
    ForwardTrace,
    TokenDecomposition,
    UnsupportedConfigError,
    create_model,
    decompose,
    exemplar_vectors,
    forward,
    label_tokens,
    load_model,
    model_fingerprint,
    predict_sentence,
    save_model,
)
from .pipeline import Prepared, predict_corpus, predict_instance, prepare_corpus
from .rerank import group_candidates, rerank, rerank_eval
from .train import (
    AdadeltaState,
    GradientSet,
    TrainConfig,
    adadelta_step,
    batch_loss,
    gradients,
    minmax_loss,
    sentence_loss,
    token_loss,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
