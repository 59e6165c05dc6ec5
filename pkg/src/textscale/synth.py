"""Synthetic corpora with a planted one-dimensional signal.

Each document carries a latent score in [-1, 1]. A slice of its tokens comes
from a pole vocabulary whose word frequencies tilt linearly with the score
(words have loadings spread from -1 to +1), so the signal lives at the level
of individual word frequencies. The remaining tokens come from
document-specific mixtures over nuisance blocks, which dominate the
corpus-level co-occurrence structure without being related to the score.
Used by the test suite and to seed demo data for the service.
"""

from __future__ import annotations

import string

import numpy as np

from textscale.corpus import DocKey, RawDocument
from textscale.evaluate import ScoreTable
from textscale.wordscores import TrainingSet

__all__ = ["TwoPoleCorpus", "make_two_pole_corpus"]


def _letter_words(prefix: str, count: int) -> list[str]:
    letters = string.ascii_lowercase
    words = []
    for i in range(count):
        words.append(prefix + letters[i // 26] + letters[i % 26])
    return words


class TwoPoleCorpus:
    """Generated documents plus everything needed to evaluate recovery."""

    def __init__(self, docs, latent, training, train_keys, virgin_keys):
        self.docs: list[RawDocument] = docs
        self.latent: ScoreTable = latent
        self.training: TrainingSet = training
        self.train_keys: list[DocKey] = train_keys
        self.virgin_keys: list[DocKey] = virgin_keys


def make_two_pole_corpus(
    n_train: int = 36,
    n_virgin: int = 96,
    tokens_per_doc: int = 1000,
    pole_words: int = 60,
    nuisance_blocks: int = 10,
    nuisance_words: int = 30,
    noise_share: float = 0.6,
    nuisance_concentration: float = 8.0,
    year_concentration: float = 2.0,
    tilt: float = 0.8,
    train_year: int = 1992,
    seed: int = 0,
) -> TwoPoleCorpus:
    """Draw a corpus whose pole-word frequencies tilt with a latent score.

    Pole word i has loading lambda_i evenly spread over [-1, 1] and is drawn
    with probability proportional to 1 + tilt * lambda_i * score. Nuisance
    block popularity drifts by year (each year has its own base mixture and
    documents vary around it), so co-occurrence structure moves over time
    while the score signal stays put. Training documents carry
    ``train_year``; virgin documents cycle through the four following years.
    The latent table covers every document.
    """
    rng = np.random.default_rng(seed)
    pole = _letter_words("pole", pole_words)
    loadings = -1.0 + 2.0 * np.arange(pole_words) / (pole_words - 1)
    blocks = [_letter_words(f"blk{string.ascii_lowercase[b]}", nuisance_words)
              for b in range(nuisance_blocks)]

    year_base: dict[int, np.ndarray] = {}

    def base_for(year):
        if year not in year_base:
            year_base[year] = rng.dirichlet(np.full(nuisance_blocks, year_concentration))
        return year_base[year]

    docs, latent_pairs = [], []
    train_keys, virgin_keys, train_scores = [], [], []
    n_total = n_train + n_virgin
    for i in range(n_total):
        s = float(rng.uniform(-1.0, 1.0))
        if i < n_train:
            year = train_year
            key = DocKey(entity=f"t{i:03d}", year=year)
            train_keys.append(key)
            train_scores.append(s)
        else:
            year = train_year + 1 + (i - n_train) % 4
            key = DocKey(entity=f"v{i - n_train:03d}", year=year)
            virgin_keys.append(key)

        mix = rng.dirichlet(nuisance_concentration * nuisance_blocks * base_for(year))
        pole_probs = 1.0 + tilt * loadings * s
        pole_probs /= pole_probs.sum()
        tokens = []
        for _ in range(tokens_per_doc):
            if rng.random() < noise_share:
                block = blocks[rng.choice(nuisance_blocks, p=mix)]
                tokens.append(block[rng.integers(len(block))])
            else:
                tokens.append(pole[rng.choice(pole_words, p=pole_probs)])
        docs.append(RawDocument(key=key, text=" ".join(tokens)))
        latent_pairs.append((key, s))

    return TwoPoleCorpus(
        docs=docs,
        latent=ScoreTable.from_pairs(latent_pairs),
        training=TrainingSet(doc_keys=train_keys, scores=np.array(train_scores)),
        train_keys=train_keys,
        virgin_keys=virgin_keys,
    )
