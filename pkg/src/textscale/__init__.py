"""Supervised text scaling toolkit.

Scores documents on a continuous scale from a small set of pre-scored
training documents, using wordscores or topic features (LSA / LDA) combined
with tree-ensemble regression, with an evaluation harness, a CLI, and an
HTTP scoring service.
"""

from textscale.corpus import (
    CorpusVariantConfig,
    DocKey,
    RawDocument,
    SparseTermMatrix,
    Vocabulary,
    build_corpus,
    build_term_matrix,
    load_matrix,
    save_matrix,
    strip_proper_nouns,
    tokenize,
)
from textscale.lda import LdaConfig, LdaTopicModel, fit_lda, infer_theta
from textscale.lsa import LsaTopicModel, exact_svd, randomized_svd
from textscale.trees import (
    AdaBoostR2,
    ExtremeRandomForest,
    RandomForest,
    RegressionTree,
    weighted_median,
)
from textscale.wordscores import TrainingSet, Wordscores, fit_wordscores, rescale

__version__ = "0.1.0"

__all__ = [
    "CorpusVariantConfig",
    "DocKey",
    "RawDocument",
    "SparseTermMatrix",
    "Vocabulary",
    "build_corpus",
    "build_term_matrix",
    "load_matrix",
    "save_matrix",
    "strip_proper_nouns",
    "tokenize",
    "LdaConfig",
    "LdaTopicModel",
    "fit_lda",
    "infer_theta",
    "LsaTopicModel",
    "exact_svd",
    "randomized_svd",
    "AdaBoostR2",
    "ExtremeRandomForest",
    "RandomForest",
    "RegressionTree",
    "weighted_median",
    "TrainingSet",
    "Wordscores",
    "fit_wordscores",
    "rescale",
]
