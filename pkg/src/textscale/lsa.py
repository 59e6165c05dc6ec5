"""Latent semantic analysis: TF-IDF weighting, column normalization, and
truncated SVD of the resulting matrix.

The workhorse is a randomized range-finder SVD (Gaussian sketch, power
iterations, small dense SVD of the projected matrix). An exact dense SVD is
provided both as an oracle for tests and as the preferred path for small
matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin

from textscale.corpus import DocKey, SparseTermMatrix, Vocabulary

__all__ = [
    "TfidfMatrix",
    "SvdFactors",
    "TopicDocMatrix",
    "tfidf",
    "normalize_columns",
    "randomized_svd",
    "exact_svd",
    "topic_doc_scores",
    "top_words",
    "LsaTopicModel",
    "save_factors",
    "load_factors",
]

# Below this size an exact dense SVD is cheap; estimators in "auto" mode use it.
EXACT_SVD_MAX_DIM = 512


@dataclass
class TfidfMatrix:
    """TF-IDF weighted counts with the same shape and keys as the source."""

    vocab: Vocabulary
    doc_keys: list[DocKey]
    weights: sp.csc_matrix
    normalized: bool = False

    def __post_init__(self):
        self.weights = sp.csc_matrix(self.weights, dtype=np.float64)

    @property
    def shape(self):
        return self.weights.shape


@dataclass
class SvdFactors:
    """Rank-k factors: left singular vectors, singular values, right singular vectors."""

    k: int
    u: np.ndarray      # m x k
    sigma: np.ndarray  # k, non-increasing
    vt: np.ndarray     # k x n
    vocab: Vocabulary | None = None
    doc_keys: list[DocKey] | None = None

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        self.vt = np.asarray(self.vt, dtype=np.float64)
        if self.u.shape[1] != self.k or self.vt.shape[0] != self.k or len(self.sigma) != self.k:
            raise ValueError("factor shapes inconsistent with k")
        if np.any(np.diff(self.sigma) > 1e-12 * max(1.0, self.sigma[0] if self.k else 1.0)):
            raise ValueError("singular values must be non-increasing")


@dataclass
class TopicDocMatrix:
    """Topic salience per document: sigma-scaled right singular vectors (k x n)."""

    scores: np.ndarray
    doc_keys: list[DocKey] | None = None

    @property
    def k(self):
        return self.scores.shape[0]

    def features(self) -> np.ndarray:
        """Documents-as-rows view (n x k) for regression methods."""
        return np.ascontiguousarray(self.scores.T)


def tfidf(matrix: SparseTermMatrix) -> TfidfMatrix:
    """Weight each count by ln(n / df) of its word.

    Words present in every document get weight exactly zero.
    """
    df = matrix.vocab.df
    if not np.array_equal(df, matrix.recomputed_df()):
        raise ValueError("vocabulary document frequencies do not match the matrix")
    n = matrix.n_docs
    idf = np.log(n / df.astype(np.float64))
    coo = matrix.counts.tocoo()
    data = coo.data.astype(np.float64) * idf[coo.row]
    weights = sp.csc_matrix((data, (coo.row, coo.col)), shape=matrix.counts.shape)
    weights.eliminate_zeros()
    return TfidfMatrix(vocab=matrix.vocab, doc_keys=list(matrix.doc_keys), weights=weights)


def normalize_columns(matrix: TfidfMatrix) -> TfidfMatrix:
    """Scale every non-zero column to unit Euclidean norm.

    Zero columns (documents emptied by filtering) stay zero so small
    entities survive the pipeline.
    """
    if matrix.normalized:
        raise ValueError("matrix is already normalized")
    weights = sp.csc_matrix(matrix.weights, copy=True)
    norms = np.sqrt(np.asarray(weights.multiply(weights).sum(axis=0))).ravel()
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    weights = weights @ sp.diags(scale)
    return TfidfMatrix(
        vocab=matrix.vocab,
        doc_keys=list(matrix.doc_keys),
        weights=sp.csc_matrix(weights),
        normalized=True,
    )


def _as_array_like(a):
    if isinstance(a, TfidfMatrix):
        return a.weights, a.vocab, a.doc_keys
    if isinstance(a, SparseTermMatrix):
        return a.counts.astype(np.float64), a.vocab, a.doc_keys
    return a, None, None


def _fix_signs(u, vt):
    # Orient each singular pair so the largest-magnitude entry of u is positive.
    for i in range(u.shape[1]):
        col = u[:, i]
        j = int(np.argmax(np.abs(col)))
        if col[j] < 0:
            u[:, i] = -col
            vt[i, :] = -vt[i, :]
    return u, vt


def randomized_svd(
    a,
    k: int,
    seed: int = 0,
    oversample: int = 10,
    power_iters: int = 4,
) -> SvdFactors:
    """Truncated SVD via a seeded Gaussian sketch with power iterations.

    Deterministic for a fixed seed. The sketch is drawn row-wise so runs with
    different k share their leading random directions.
    """
    mat, vocab, doc_keys = _as_array_like(a)
    m, n = mat.shape
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k={k} out of range for a {m}x{n} matrix")
    rng = np.random.default_rng(seed)
    ell = min(k + oversample, m, n)
    omega = rng.standard_normal((ell, n)).T
    q, _ = np.linalg.qr(_densify(mat @ omega))
    for _ in range(power_iters):
        z, _ = np.linalg.qr(_densify(mat.T @ q))
        q, _ = np.linalg.qr(_densify(mat @ z))
    b = _densify(q.T @ mat)
    ub, sigma, vt = np.linalg.svd(b, full_matrices=False)
    u = q @ ub
    u, vt = _fix_signs(u[:, :k].copy(), vt[:k, :].copy())
    return SvdFactors(k=k, u=u, sigma=sigma[:k], vt=vt, vocab=vocab, doc_keys=doc_keys)


def exact_svd(a, k: int | None = None) -> SvdFactors:
    """Dense full SVD truncated to k. Oracle path for tests and small inputs."""
    mat, vocab, doc_keys = _as_array_like(a)
    dense = _densify(mat) if sp.issparse(mat) else np.asarray(mat, dtype=np.float64)
    m, n = dense.shape
    if k is None:
        k = min(m, n)
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k={k} out of range for a {m}x{n} matrix")
    u, sigma, vt = np.linalg.svd(dense, full_matrices=False)
    u, vt = _fix_signs(u[:, :k].copy(), vt[:k, :].copy())
    return SvdFactors(k=k, u=u, sigma=sigma[:k], vt=vt, vocab=vocab, doc_keys=doc_keys)


def _densify(x):
    return np.asarray(x.todense()) if sp.issparse(x) else np.asarray(x)


def topic_doc_scores(factors: SvdFactors) -> TopicDocMatrix:
    """Map topics onto documents: row i is sigma_i times the i-th right singular vector."""
    scores = factors.sigma[:, None] * factors.vt
    return TopicDocMatrix(scores=scores, doc_keys=factors.doc_keys)


def top_words(factors: SvdFactors, topic: int, count: int) -> list[tuple[str, float]]:
    """Highest-salience words of one topic, by absolute weight.

    Ties break toward the lower vocabulary index; count larger than the
    vocabulary returns everything.
    """
    if factors.vocab is None:
        raise ValueError("factors carry no vocabulary")
    if not 0 <= topic < factors.k:
        raise ValueError(f"topic {topic} out of range (k={factors.k})")
    weights = factors.u[:, topic]
    order = sorted(range(len(weights)), key=lambda i: (-abs(weights[i]), i))
    return [(factors.vocab.words[i], float(weights[i])) for i in order[:count]]


class LsaTopicModel(BaseEstimator, TransformerMixin):
    """TF-IDF + normalization + truncated SVD over a term matrix.

    fit() accepts a :class:`SparseTermMatrix`; transform() returns the
    document-by-topic feature array for the fitted corpus. Folding unseen
    documents into the topic space is out of scope, so transform() only
    accepts the corpus it was fitted on.
    """

    def __init__(self, k=50, seed=0, oversample=10, power_iters=4, svd_method="randomized"):
        self.k = k
        self.seed = seed
        self.oversample = oversample
        self.power_iters = power_iters
        self.svd_method = svd_method

    def fit(self, X: SparseTermMatrix, y=None):
        weighted = normalize_columns(tfidf(X))
        method = self.svd_method
        if method == "auto":
            method = "exact" if min(weighted.shape) <= EXACT_SVD_MAX_DIM else "randomized"
        if method == "exact":
            self.factors_ = exact_svd(weighted, self.k)
        elif method == "randomized":
            self.factors_ = randomized_svd(
                weighted, self.k, seed=self.seed,
                oversample=self.oversample, power_iters=self.power_iters,
            )
        else:
            raise ValueError(f"unknown svd_method {self.svd_method!r}")
        self.topic_docs_ = topic_doc_scores(self.factors_)
        return self

    def transform(self, X: SparseTermMatrix) -> np.ndarray:
        if not hasattr(self, "factors_"):
            raise ValueError("model is not fitted")
        if X.doc_keys != self.factors_.doc_keys:
            raise ValueError("transform only supports the corpus the model was fitted on")
        return self.topic_docs_.features()

    def top_words(self, topic: int, count: int = 20):
        return top_words(self.factors_, topic, count)


def save_factors(factors: SvdFactors, path: str | Path) -> None:
    """Write factors as text: header ``m n k``, sigma, row-major u, row-major vt."""
    m = factors.u.shape[0]
    n = factors.vt.shape[1]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{m} {n} {factors.k}\n")
        fh.write(_fmt_row(factors.sigma) + "\n")
        for row in factors.u:
            fh.write(_fmt_row(row) + "\n")
        for row in factors.vt:
            fh.write(_fmt_row(row) + "\n")


def load_factors(path: str | Path) -> SvdFactors:
    with open(path, encoding="utf-8") as fh:
        m, n, k = (int(x) for x in fh.readline().split())
        sigma = np.array([float(x) for x in fh.readline().split()])
        u = np.array([[float(x) for x in fh.readline().split()] for _ in range(m)])
        vt = np.array([[float(x) for x in fh.readline().split()] for _ in range(k)])
    if u.shape != (m, k) or vt.shape != (k, n) or len(sigma) != k:
        raise ValueError("factor file shapes inconsistent with header")
    return SvdFactors(k=k, u=u, sigma=sigma, vt=vt)


def _fmt_row(values) -> str:
    return " ".join(f"{v:.17g}" for v in values)
