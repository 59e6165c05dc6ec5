"""Wordscores: score words from pre-scored training documents, then score
virgin documents as relative-frequency-weighted averages, with standard
errors and the classic dispersion-matching rescale.

Conventions (documented because the method leaves them open):

* Relative frequencies in virgin documents are taken over scored tokens
  only, so out-of-training-vocabulary words are invisible and every raw
  virgin score is a convex combination of word scores.
* ``n_tokens`` is the per-document count of scored tokens and is the
  denominator of the standard error.
* Standard deviations (training and virgin) are population style
  (divide by n).
* Rescaling multiplies standard errors by the same stretch factor, so
  confidence intervals live on the rescaled scale.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from textscale.corpus import DocKey, SparseTermMatrix

__all__ = [
    "TrainingSet",
    "WordscoresModel",
    "VirginScore",
    "UnscorableDocumentError",
    "fit_wordscores",
    "score_virgin",
    "score_all",
    "rescale",
    "Wordscores",
    "read_training_csv",
    "write_scores_csv",
]

CI_MULTIPLIER = 1.96  # normal 95%


class UnscorableDocumentError(ValueError):
    """The document contains no token with a word score."""


@dataclass
class TrainingSet:
    """Training document keys with their a-priori scores."""

    doc_keys: list[DocKey]
    scores: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if len(self.doc_keys) != len(self.scores):
            raise ValueError("one score per training key required")
        if len(self.doc_keys) < 2:
            raise ValueError("need at least 2 training documents")
        if len(set(self.doc_keys)) != len(self.doc_keys):
            raise ValueError("duplicate training keys")
        if not np.isfinite(self.scores).all():
            raise ValueError("training scores must be finite")
        if np.ptp(self.scores) == 0:
            raise ValueError("training scores are all identical (zero spread)")


@dataclass
class WordscoresModel:
    """Per-word scores plus the training-score spread used for rescaling."""

    word_scores: dict[str, float]
    sigma_t: float
    training_keys: list[DocKey]
    score_min: float
    score_max: float


@dataclass(frozen=True)
class VirginScore:
    """Scores of one virgin document.

    ``raw``, ``variance``, ``n_tokens`` and ``std_error`` are filled by
    scoring; ``rescaled``, the rescaled ``std_error`` replacement and the
    confidence bounds are filled by :func:`rescale`.
    """

    key: DocKey
    raw: float
    variance: float
    n_tokens: int
    std_error: float
    rescaled: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None


def fit_wordscores(matrix: SparseTermMatrix, training: TrainingSet) -> WordscoresModel:
    """Compute word scores from the training columns of the matrix.

    Each word's score is the training-score average weighted by the
    probability of reading each training document given the word. Words
    absent from every training document get no score.
    """
    missing = [k for k in training.doc_keys if k not in set(matrix.doc_keys)]
    if missing:
        raise ValueError(f"training keys not in matrix: {missing[:5]}")
    cols = [matrix.doc_index(k) for k in training.doc_keys]
    counts = np.asarray(matrix.counts[:, cols].todense(), dtype=np.float64)
    totals = counts.sum(axis=0)
    empty = [training.doc_keys[i] for i in np.flatnonzero(totals == 0)]
    if empty:
        raise ValueError(f"training documents with zero tokens: {empty[:5]}")

    rel_freq = counts / totals  # F_wt
    row_sums = rel_freq.sum(axis=1)
    scored = row_sums > 0
    # P(t|w) rows normalized over training docs, then averaged against scores
    probs = rel_freq[scored] / row_sums[scored, None]
    scores = probs @ training.scores

    word_scores = {
        matrix.vocab.words[i]: float(s)
        for i, s in zip(np.flatnonzero(scored), scores)
    }
    return WordscoresModel(
        word_scores=word_scores,
        sigma_t=float(np.std(training.scores)),
        training_keys=list(training.doc_keys),
        score_min=float(training.scores.min()),
        score_max=float(training.scores.max()),
    )


def _aligned_scores(model: WordscoresModel, matrix: SparseTermMatrix):
    """Word-score vector aligned to the matrix vocabulary plus a mask."""
    m = matrix.n_words
    aligned = np.zeros(m)
    mask = np.zeros(m, dtype=bool)
    for i, word in enumerate(matrix.vocab.words):
        s = model.word_scores.get(word)
        if s is not None:
            aligned[i] = s
            mask[i] = True
    return aligned, mask


def score_virgin(model: WordscoresModel, matrix: SparseTermMatrix, key: DocKey,
                 _aligned=None) -> VirginScore:
    """Raw score, dispersion and standard error of one virgin document."""
    aligned, mask = _aligned if _aligned is not None else _aligned_scores(model, matrix)
    counts = matrix.column(key)
    scored_counts = counts[mask]
    n_tokens = int(scored_counts.sum())
    if n_tokens == 0:
        raise UnscorableDocumentError(f"{key}: no scored tokens in document")
    rel_freq = scored_counts / n_tokens  # F_wv over scored tokens only
    s_w = aligned[mask]
    raw = float(rel_freq @ s_w)
    variance = max(0.0, float(rel_freq @ (s_w - raw) ** 2))
    std_error = math.sqrt(variance) / math.sqrt(n_tokens)
    return VirginScore(key=key, raw=raw, variance=variance,
                       n_tokens=n_tokens, std_error=std_error)


def score_all(model: WordscoresModel, matrix: SparseTermMatrix,
              keys=None) -> tuple[list[VirginScore], list[DocKey]]:
    """Score many documents; returns (scores, unscorable keys).

    ``keys`` defaults to every document that is not a training document.
    """
    if keys is None:
        training = set(model.training_keys)
        keys = [k for k in matrix.doc_keys if k not in training]
    aligned = _aligned_scores(model, matrix)
    results, unscorable = [], []
    for key in keys:
        try:
            results.append(score_virgin(model, matrix, key, _aligned=aligned))
        except UnscorableDocumentError:
            unscorable.append(key)
    return results, unscorable


def rescale(scores: list[VirginScore], model: WordscoresModel) -> list[VirginScore]:
    """Stretch raw virgin scores to the training-score standard deviation.

    Standard errors are stretched by the same factor and the 95% interval
    is attached; the mean of the scores is preserved.
    """
    if len(scores) < 2:
        raise ValueError("rescaling needs at least 2 scorable virgin documents")
    raw = np.array([s.raw for s in scores])
    sigma_v = float(np.std(raw))
    # ptp check: identical raws can produce a denormal-tiny std through
    # rounding of the mean, which is still a degenerate virgin set
    if sigma_v == 0 or np.ptp(raw) == 0:
        raise ValueError("virgin scores have zero spread; cannot rescale")
    factor = model.sigma_t / sigma_v
    mean = float(np.mean(raw))
    out = []
    for s in scores:
        rescaled = (s.raw - mean) * factor + mean
        err = s.std_error * factor
        out.append(
            dataclasses.replace(
                s, rescaled=rescaled, std_error=err,
                ci_low=rescaled - CI_MULTIPLIER * err,
                ci_high=rescaled + CI_MULTIPLIER * err,
            )
        )
    return out


class Wordscores(BaseEstimator):
    """Estimator facade: fit on a term matrix plus training scores, predict
    rescaled scores for the remaining documents."""

    def fit(self, X: SparseTermMatrix, y: TrainingSet):
        self.model_ = fit_wordscores(X, y)
        return self

    def predict(self, X: SparseTermMatrix, keys=None) -> list[VirginScore]:
        if not hasattr(self, "model_"):
            raise ValueError("model is not fitted")
        scores, self.unscorable_ = score_all(self.model_, X, keys)
        return rescale(scores, self.model_)


def read_training_csv(path: str | Path, years=None) -> TrainingSet:
    """Read ``entity,year,score`` rows; optionally keep only given years."""
    with open(path, newline="", encoding="utf-8") as fh:
        return read_training_csv_file(fh, years=years)


def read_training_csv_file(fh, years=None) -> TrainingSet:
    keys, scores = [], []
    reader = csv.DictReader(fh)
    required = {"entity", "year", "score"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise ValueError(f"training CSV must have columns {sorted(required)}")
    for row in reader:
        year = int(row["year"])
        if years is not None and year not in years:
            continue
        score = float(row["score"])
        if not math.isfinite(score):
            raise ValueError(f"non-finite score for {row['entity']},{year}")
        keys.append(DocKey(entity=row["entity"], year=year))
        scores.append(score)
    return TrainingSet(doc_keys=keys, scores=np.array(scores))


def write_scores_csv(scores: list[VirginScore], path: str | Path) -> None:
    """Write ``entity,year,raw,rescaled,std_error,ci_low,ci_high,n_tokens``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["entity", "year", "raw", "rescaled", "std_error", "ci_low", "ci_high", "n_tokens"]
        )
        for s in scores:
            writer.writerow([
                s.key.entity, s.key.year,
                _fmt(s.raw), _fmt(s.rescaled), _fmt(s.std_error),
                _fmt(s.ci_low), _fmt(s.ci_high), s.n_tokens,
            ])


def _fmt(value) -> str:
    return "" if value is None else f"{value:.17g}"
