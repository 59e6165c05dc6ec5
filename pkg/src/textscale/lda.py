"""Latent Dirichlet allocation fitted by online variational Bayes.

Mini-batches follow the decaying learning rate (tau0 + t)^-kappa; when a
single batch covers the whole corpus the learning rate is pinned to 1, which
is plain batch variational inference and makes the evidence lower bound
non-decreasing across passes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaln, psi
from sklearn.base import BaseEstimator, TransformerMixin

from textscale.corpus import DocKey, SparseTermMatrix, Vocabulary

__all__ = [
    "LdaConfig",
    "LdaModel",
    "DocTopicMatrix",
    "fit_lda",
    "infer_theta",
    "elbo",
    "LdaTopicModel",
    "save_lda_model",
    "load_lda_model",
]

# Per-document inference stops once the mean absolute change of the
# normalized topic proportions drops below this, or after MAX_INFER_ITERS.
THETA_CONVERGENCE = 1e-5
MAX_INFER_ITERS = 100


@dataclass
class LdaConfig:
    k: int
    alpha_mode: str = "symmetric"
    eta: float | None = None       # defaults to 1/k
    passes: int = 10
    batch_size: int = 256
    kappa: float = 0.7
    tau0: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.alpha_mode not in ("symmetric", "asymmetric_normalized"):
            raise ValueError(f"unknown alpha_mode {self.alpha_mode!r}")
        if self.eta is None:
            self.eta = 1.0 / self.k
        if self.eta <= 0 or self.tau0 <= 0 or self.passes < 1 or self.batch_size < 1:
            raise ValueError("eta, tau0, passes and batch_size must be positive")
        if not 0.5 < self.kappa <= 1.0:
            raise ValueError("kappa must lie in (0.5, 1]")

    def make_alpha(self) -> np.ndarray:
        if self.alpha_mode == "symmetric":
            return np.full(self.k, 1.0 / self.k)
        # Fixed decreasing sequence 1/(i + sqrt(k)), normalized to sum 1.
        raw = 1.0 / (np.arange(self.k) + np.sqrt(self.k))
        return raw / raw.sum()


@dataclass
class LdaModel:
    """Fitted topic model: Dirichlet prior alpha and topic-word rows beta.

    ``lam`` is the variational state behind beta; it exists on freshly
    fitted models and is needed by :func:`elbo`, but it is not part of the
    serialized interchange format.
    """

    config: LdaConfig
    alpha: np.ndarray
    beta: np.ndarray
    vocab: Vocabulary | None = None
    lam: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        self.beta = np.asarray(self.beta, dtype=np.float64)
        if self.beta.shape[0] != self.config.k or len(self.alpha) != self.config.k:
            raise ValueError("model shapes inconsistent with k")
        if np.any(self.beta <= 0):
            raise ValueError("beta entries must be strictly positive")
        if np.max(np.abs(self.beta.sum(axis=1) - 1.0)) > 1e-8:
            raise ValueError("beta rows must sum to 1")

    @property
    def k(self):
        return self.config.k

    @property
    def n_words(self):
        return self.beta.shape[1]


@dataclass
class DocTopicMatrix:
    """Per-document topic proportions, documents on rows (n x k)."""

    theta: np.ndarray
    doc_keys: list[DocKey]

    def features(self) -> np.ndarray:
        return self.theta


def _dirichlet_expectation(x):
    if x.ndim == 1:
        return psi(x) - psi(x.sum())
    return psi(x) - psi(x.sum(axis=1))[:, None]


def _doc_arrays(matrix: SparseTermMatrix):
    csc = matrix.counts
    ids, cts = [], []
    for j in range(matrix.n_docs):
        sl = slice(csc.indptr[j], csc.indptr[j + 1])
        ids.append(csc.indices[sl].astype(np.int64))
        cts.append(csc.data[sl].astype(np.float64))
    return ids, cts


def _infer_doc(ids, cts, alpha, exp_elog_beta_cols):
    """Variational update for one document against fixed topic expectations.

    Returns the unnormalized Dirichlet parameter gamma and the phi norm
    terms needed for sufficient statistics.
    """
    k = len(alpha)
    total = cts.sum()
    gamma = alpha + total / k  # deterministic start keeps everything reproducible
    if len(ids) == 0:
        return alpha.copy(), None
    theta = gamma / gamma.sum()
    for _ in range(MAX_INFER_ITERS):
        exp_elog_theta = np.exp(_dirichlet_expectation(gamma))
        phinorm = exp_elog_theta @ exp_elog_beta_cols + 1e-100
        gamma = alpha + exp_elog_theta * ((cts / phinorm) @ exp_elog_beta_cols.T)
        new_theta = gamma / gamma.sum()
        if np.mean(np.abs(new_theta - theta)) < THETA_CONVERGENCE:
            theta = new_theta
            break
        theta = new_theta
    exp_elog_theta = np.exp(_dirichlet_expectation(gamma))
    phinorm = exp_elog_theta @ exp_elog_beta_cols + 1e-100
    return gamma, (exp_elog_theta, cts / phinorm)


def fit_lda(matrix: SparseTermMatrix, config: LdaConfig, pass_callback=None) -> LdaModel:
    """Fit by online variational Bayes, deterministically for a fixed seed.

    ``pass_callback(pass_index, model)`` is invoked after each full pass
    with a snapshot of the current model, for diagnostics.
    """
    n_docs, m = matrix.n_docs, matrix.n_words
    if n_docs == 0 or m == 0:
        raise ValueError("cannot fit a topic model on an empty corpus")
    alpha = config.make_alpha()
    rng = np.random.default_rng(config.seed)
    lam = rng.gamma(100.0, 1.0 / 100.0, (config.k, m))
    ids, cts = _doc_arrays(matrix)
    batch_starts = range(0, n_docs, config.batch_size)
    full_batch = config.batch_size >= n_docs
    update_count = 0
    for pass_index in range(config.passes):
        for start in batch_starts:
            batch = range(start, min(start + config.batch_size, n_docs))
            exp_elog_beta = np.exp(_dirichlet_expectation(lam))
            sstats = np.zeros_like(lam)
            for d in batch:
                gamma, parts = _infer_doc(ids[d], cts[d], alpha, exp_elog_beta[:, ids[d]])
                if parts is not None:
                    exp_elog_theta, ratio = parts
                    sstats[:, ids[d]] += np.outer(exp_elog_theta, ratio)
            sstats *= exp_elog_beta
            rho = 1.0 if full_batch else (config.tau0 + update_count) ** -config.kappa
            lam = (1.0 - rho) * lam + rho * (config.eta + (n_docs / len(batch)) * sstats)
            update_count += 1
        if pass_callback is not None:
            snapshot = LdaModel(
                config=config, alpha=alpha,
                beta=lam / lam.sum(axis=1)[:, None],
                vocab=matrix.vocab, lam=lam.copy(),
            )
            pass_callback(pass_index, snapshot)
    beta = lam / lam.sum(axis=1)[:, None]
    return LdaModel(config=config, alpha=alpha, beta=beta, vocab=matrix.vocab, lam=lam)


def infer_theta(model: LdaModel, matrix: SparseTermMatrix) -> DocTopicMatrix:
    """Per-document topic proportions under the fitted topics.

    Documents with no tokens fall back to the normalized prior.
    """
    _check_vocab(model, matrix)
    ids, cts = _doc_arrays(matrix)
    theta = np.empty((matrix.n_docs, model.k))
    for d in range(matrix.n_docs):
        gamma, _ = _infer_doc(ids[d], cts[d], model.alpha, model.beta[:, ids[d]])
        theta[d] = gamma / gamma.sum()
    return DocTopicMatrix(theta=theta, doc_keys=list(matrix.doc_keys))


def elbo(model: LdaModel, matrix: SparseTermMatrix) -> float:
    """Variational evidence lower bound of the corpus under the model.

    Requires the variational state of a freshly fitted model; models loaded
    from the interchange format carry only the topic distributions and
    cannot be scored.
    """
    if model.lam is None:
        raise ValueError("model carries no variational state (was it loaded from disk?)")
    _check_vocab(model, matrix)
    lam = model.lam
    alpha, eta, k, m = model.alpha, model.config.eta, model.k, model.n_words
    elog_beta = _dirichlet_expectation(lam)
    exp_elog_beta = np.exp(elog_beta)
    ids, cts = _doc_arrays(matrix)
    score = 0.0
    for d in range(matrix.n_docs):
        gamma, _ = _infer_doc(ids[d], cts[d], alpha, exp_elog_beta[:, ids[d]])
        elog_theta = _dirichlet_expectation(gamma)
        if len(ids[d]):
            # E[log p(w|theta,beta)] with z collapsed at the optimal phi
            log_phinorm = _logsumexp_rows(elog_theta[:, None] + elog_beta[:, ids[d]])
            score += float(cts[d] @ log_phinorm)
        score += float(np.sum((alpha - gamma) * elog_theta))
        score += float(np.sum(gammaln(gamma) - gammaln(alpha)))
        score += float(gammaln(alpha.sum()) - gammaln(gamma.sum()))
    score += float(np.sum((eta - lam) * elog_beta))
    score += float(np.sum(gammaln(lam) - gammaln(eta)))
    score += float(np.sum(gammaln(eta * m) - gammaln(lam.sum(axis=1))))
    return score


def _logsumexp_rows(x):
    top = x.max(axis=0)
    return np.log(np.exp(x - top).sum(axis=0)) + top


def _check_vocab(model: LdaModel, matrix: SparseTermMatrix):
    if model.n_words != matrix.n_words:
        raise ValueError(
            f"model vocabulary size {model.n_words} != matrix {matrix.n_words}"
        )
    if model.vocab is not None and model.vocab.words != matrix.vocab.words:
        raise ValueError("model and matrix vocabularies differ")


class LdaTopicModel(BaseEstimator, TransformerMixin):
    """Estimator facade over :func:`fit_lda` / :func:`infer_theta`."""

    def __init__(self, k=50, alpha_mode="symmetric", eta=None, passes=10,
                 batch_size=256, kappa=0.7, tau0=1.0, seed=0):
        self.k = k
        self.alpha_mode = alpha_mode
        self.eta = eta
        self.passes = passes
        self.batch_size = batch_size
        self.kappa = kappa
        self.tau0 = tau0
        self.seed = seed

    def _config(self) -> LdaConfig:
        return LdaConfig(
            k=self.k, alpha_mode=self.alpha_mode, eta=self.eta, passes=self.passes,
            batch_size=self.batch_size, kappa=self.kappa, tau0=self.tau0, seed=self.seed,
        )

    def fit(self, X: SparseTermMatrix, y=None):
        self.model_ = fit_lda(X, self._config())
        return self

    def transform(self, X: SparseTermMatrix) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise ValueError("model is not fitted")
        return infer_theta(self.model_, X).features()

    def score(self, X: SparseTermMatrix, y=None) -> float:
        return elbo(self.model_, X)


def save_lda_model(model: LdaModel, path: str | Path) -> None:
    """Text format: header ``k m``, the alpha line, then beta row-major."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{model.k} {model.n_words}\n")
        fh.write(" ".join(f"{a:.17g}" for a in model.alpha) + "\n")
        for row in model.beta:
            fh.write(" ".join(f"{b:.17g}" for b in row) + "\n")


def load_lda_model(path: str | Path, config: LdaConfig | None = None) -> LdaModel:
    with open(path, encoding="utf-8") as fh:
        k, m = (int(x) for x in fh.readline().split())
        alpha = np.array([float(x) for x in fh.readline().split()])
        beta = np.array([[float(x) for x in fh.readline().split()] for _ in range(k)])
    if beta.shape != (k, m) or len(alpha) != k:
        raise ValueError("model file shapes inconsistent with header")
    config = config or LdaConfig(k=k)
    return LdaModel(config=config, alpha=alpha, beta=beta)
