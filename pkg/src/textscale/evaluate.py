"""Evaluation harness: score tables, correlations, per-year summaries,
discrepancy rankings, confidence-interval overlap counts, difference-of-means
tests, and the batch grid that runs every configured scaling approach over a
corpus and correlates each against a reference index.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import erfc

from textscale.corpus import DocKey, SparseTermMatrix
from textscale.lda import LdaTopicModel
from textscale.lsa import LsaTopicModel
from textscale.trees import AdaBoostR2, ExtremeRandomForest, RandomForest, RegressionTree
from textscale.wordscores import TrainingSet, Wordscores

__all__ = [
    "ScoreRow",
    "ScoreTable",
    "GroupStats",
    "DiffOfMeansResult",
    "SummaryStats",
    "Discrepancy",
    "OverlapStats",
    "BatchSpec",
    "BatchResult",
    "GridReport",
    "pearson",
    "summary_by_year",
    "discrepancies",
    "ci_overlap_stats",
    "diff_of_means",
    "range_vs_size",
    "run_batch",
    "run_batch_grid",
    "training_from_table",
]

TREE_METHODS = ("tree", "rf", "erf", "ada")
APPROACHES = ("wordscores", "lsa_trees", "lda_trees")


@dataclass(frozen=True)
class ScoreRow:
    score: float
    std_error: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None


class ScoreTable:
    """Scores keyed by document, with optional uncertainty columns."""

    def __init__(self, rows: dict[DocKey, ScoreRow]):
        for key, row in rows.items():
            if not math.isfinite(row.score):
                raise ValueError(f"non-finite score for {key}")
        self.rows = dict(rows)

    def __len__(self):
        return len(self.rows)

    def __contains__(self, key):
        return key in self.rows

    def __getitem__(self, key) -> ScoreRow:
        return self.rows[key]

    def keys(self):
        return self.rows.keys()

    def items(self):
        return self.rows.items()

    def scores(self) -> np.ndarray:
        return np.array([r.score for r in self.rows.values()])

    @classmethod
    def from_pairs(cls, pairs) -> "ScoreTable":
        return cls({key: ScoreRow(score=float(score)) for key, score in pairs})

    @classmethod
    def from_virgin_scores(cls, scores) -> "ScoreTable":
        rows = {}
        for s in scores:
            if s.rescaled is None:
                raise ValueError(f"{s.key}: virgin score was not rescaled")
            rows[s.key] = ScoreRow(score=s.rescaled, std_error=s.std_error,
                                   ci_low=s.ci_low, ci_high=s.ci_high)
        return cls(rows)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            self.write(fh)

    def write(self, fh) -> None:
        writer = csv.writer(fh)
        writer.writerow(["entity", "year", "score", "std_error", "ci_low", "ci_high"])
        for key, row in self.rows.items():
            writer.writerow([
                key.entity, key.year, _fmt(row.score),
                _fmt(row.std_error), _fmt(row.ci_low), _fmt(row.ci_high),
            ])

    def to_csv_text(self) -> str:
        import io

        buf = io.StringIO()
        self.write(buf)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, path: str | Path) -> "ScoreTable":
        with open(path, newline="", encoding="utf-8") as fh:
            return cls.from_csv_file(fh)

    @classmethod
    def from_csv_file(cls, fh) -> "ScoreTable":
        reader = csv.DictReader(fh)
        required = {"entity", "year", "score"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"score CSV must have columns {sorted(required)}")
        rows = {}
        for line in reader:
            key = DocKey(entity=line["entity"], year=int(line["year"]))
            if key in rows:
                raise ValueError(f"duplicate key in score CSV: {key}")
            rows[key] = ScoreRow(
                score=float(line["score"]),
                std_error=_opt_float(line.get("std_error")),
                ci_low=_opt_float(line.get("ci_low")),
                ci_high=_opt_float(line.get("ci_high")),
            )
        return cls(rows)


def _fmt(value) -> str:
    return "" if value is None else f"{value:.17g}"


def _opt_float(value):
    if value is None or value == "":
        return None
    return float(value)


def pearson(a: ScoreTable, b: ScoreTable) -> float:
    """Pearson correlation over the key intersection of two tables."""
    shared = [k for k in a.keys() if k in b]
    if len(shared) < 2:
        raise ValueError(f"need at least 2 shared keys, got {len(shared)}")
    xs = np.array([a[k].score for k in shared])
    ys = np.array([b[k].score for k in shared])
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0:
        raise ValueError("zero variance in one of the tables over shared keys")
    return float(dx @ dy) / denom


@dataclass
class SummaryStats:
    n: int
    mean: float
    std: float
    min: float
    max: float


def summary_by_year(scores: ScoreTable) -> dict[str, SummaryStats]:
    """Per-year n/mean/std/min/max plus an "all" row. Population std."""
    if len(scores) == 0:
        raise ValueError("empty score table")
    by_year: dict[int, list[float]] = {}
    for key, row in scores.items():
        by_year.setdefault(key.year, []).append(row.score)
    out: dict[str, SummaryStats] = {}
    for year in sorted(by_year):
        out[str(year)] = _stats(by_year[year])
    out["all"] = _stats([row.score for row in scores.rows.values()])
    return out


def _stats(values) -> SummaryStats:
    arr = np.array(values)
    return SummaryStats(n=len(arr), mean=float(arr.mean()), std=float(arr.std()),
                        min=float(arr.min()), max=float(arr.max()))


@dataclass(frozen=True)
class Discrepancy:
    key: DocKey
    a: float
    b: float
    delta: float


def discrepancies(a: ScoreTable, b: ScoreTable, top: int) -> tuple[list[Discrepancy], list[Discrepancy]]:
    """Largest positive and largest negative differences a - b.

    Returns (positive list, descending delta) and (negative list, ascending
    delta); ties order by key.
    """
    shared = [k for k in a.keys() if k in b]
    rows = [Discrepancy(key=k, a=a[k].score, b=b[k].score, delta=a[k].score - b[k].score)
            for k in shared]
    positive = sorted(rows, key=lambda r: (-r.delta, r.key))[:top]
    negative = sorted(rows, key=lambda r: (r.delta, r.key))[:top]
    return positive, negative


@dataclass
class OverlapStats:
    per_key: dict[DocKey, int]
    mean: float


def ci_overlap_stats(scores: ScoreTable) -> OverlapStats:
    """For each key, how many other keys' confidence intervals intersect its own.

    Closed intervals: touching endpoints count as overlapping. Counted with
    a sorted-bounds scan, not pairwise comparison.
    """
    keys = list(scores.keys())
    for k in keys:
        row = scores[k]
        if row.ci_low is None or row.ci_high is None:
            raise ValueError(f"{k}: missing confidence interval")
        if row.ci_low > row.ci_high:
            raise ValueError(f"{k}: ci_low above ci_high")
    lows = np.sort(np.array([scores[k].ci_low for k in keys]))
    highs = np.sort(np.array([scores[k].ci_high for k in keys]))
    per_key = {}
    for k in keys:
        row = scores[k]
        # overlaps = total - (intervals entirely left of me) - (entirely right of me) - self
        n_left = int(np.searchsorted(highs, row.ci_low, side="left"))
        n_right = len(keys) - int(np.searchsorted(lows, row.ci_high, side="right"))
        per_key[k] = len(keys) - n_left - n_right - 1
    mean = float(np.mean(list(per_key.values()))) if per_key else 0.0
    return OverlapStats(per_key=per_key, mean=mean)


@dataclass(frozen=True)
class GroupStats:
    mean: float
    std_error: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("group n must be at least 1")
        if self.std_error < 0:
            raise ValueError("std_error must be non-negative")


@dataclass(frozen=True)
class DiffOfMeansResult:
    z: float
    p: float            # two-sided
    p_one_sided: float


def diff_of_means(g1: GroupStats, g2: GroupStats) -> DiffOfMeansResult:
    """z test for the difference of two group means given their standard errors.

    Reports the two-sided normal p-value and the one-sided (directional)
    value, which is half of it.
    """
    denom = math.sqrt(g1.std_error ** 2 + g2.std_error ** 2)
    if denom == 0:
        raise ValueError("both standard errors are zero")
    z = (g1.mean - g2.mean) / denom
    p = float(erfc(abs(z) / math.sqrt(2.0)))
    return DiffOfMeansResult(z=z, p=p, p_one_sided=p / 2.0)


def range_vs_size(scores: ScoreTable, sizes: dict[DocKey, float]) -> list[tuple[DocKey, float, float]]:
    """Pair each key's document size with its confidence-interval width."""
    out = []
    for key, row in scores.items():
        if key not in sizes:
            continue
        if row.ci_low is None or row.ci_high is None:
            raise ValueError(f"{key}: missing confidence interval")
        out.append((key, float(sizes[key]), row.ci_high - row.ci_low))
    return out


# ---------------------------------------------------------------------------
# Batch grid


@dataclass(frozen=True)
class BatchSpec:
    """One scored batch: approach plus every hyperparameter that matters.

    Tree fields are ignored for the wordscores approach; alpha_mode only
    matters for lda_trees. ``n_trees`` defaults to the 10,000 used for the
    headline runs but should be lowered for desk-scale experiments.
    """

    approach: str
    variant: str = "A"
    k: int = 50
    tree_method: str = "rf"
    c_mode: str = "all_x"
    min_leaf: int = 5
    alpha_mode: str = "symmetric"
    seed: int = 0
    n_trees: int = 10000

    def __post_init__(self):
        if self.approach not in APPROACHES:
            raise ValueError(f"unknown approach {self.approach!r}")
        if self.variant not in ("A", "B"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.approach != "wordscores" and self.tree_method not in TREE_METHODS:
            raise ValueError(f"unknown tree_method {self.tree_method!r}")

    def label(self) -> str:
        if self.approach == "wordscores":
            return f"wordscores corpus={self.variant}"
        parts = [self.approach, f"corpus={self.variant}", f"k={self.k}",
                 self.tree_method, f"c={self.c_mode}", f"l={self.min_leaf}",
                 f"seed={self.seed}"]
        if self.approach == "lda_trees":
            parts.insert(3, f"alpha={self.alpha_mode}")
        return " ".join(parts)

    @classmethod
    def from_dict(cls, d: dict) -> "BatchSpec":
        return cls(**d)


def _tree_estimator(spec: BatchSpec):
    common = dict(c_mode=spec.c_mode, min_leaf=spec.min_leaf, seed=spec.seed)
    if spec.tree_method == "tree":
        return RegressionTree(**common)
    if spec.tree_method == "rf":
        return RandomForest(n_trees=spec.n_trees, **common)
    if spec.tree_method == "erf":
        return ExtremeRandomForest(n_trees=spec.n_trees, **common)
    return AdaBoostR2(n_trees=spec.n_trees, **common)


def _topic_features(matrix: SparseTermMatrix, spec: BatchSpec, cache: dict | None):
    if spec.approach == "lsa_trees":
        key = (spec.variant, "lsa", spec.k, spec.seed)
    else:
        key = (spec.variant, "lda", spec.k, spec.alpha_mode, spec.seed)
    if cache is not None and key in cache:
        return cache[key]
    if spec.approach == "lsa_trees":
        features = LsaTopicModel(k=spec.k, seed=spec.seed).fit(matrix).transform(matrix)
    else:
        features = LdaTopicModel(k=spec.k, alpha_mode=spec.alpha_mode,
                                 seed=spec.seed).fit(matrix).transform(matrix)
    if cache is not None:
        cache[key] = features
    return features


def run_batch(matrices: dict[str, SparseTermMatrix], spec: BatchSpec,
              training: TrainingSet, cache: dict | None = None) -> ScoreTable:
    """Produce one batch of scores for every non-training document."""
    matrix = matrices[spec.variant]
    if spec.approach == "wordscores":
        return ScoreTable.from_virgin_scores(Wordscores().fit(matrix, training).predict(matrix))
    features = _topic_features(matrix, spec, cache)
    index = {k: i for i, k in enumerate(matrix.doc_keys)}
    missing = [k for k in training.doc_keys if k not in index]
    if missing:
        raise ValueError(f"training keys not in matrix: {missing[:5]}")
    train_rows = features[[index[k] for k in training.doc_keys]]
    estimator = _tree_estimator(spec).fit(train_rows, training.scores)
    training_keys = set(training.doc_keys)
    virgin = [k for k in matrix.doc_keys if k not in training_keys]
    preds = estimator.predict(features[[index[k] for k in virgin]])
    return ScoreTable.from_pairs(zip(virgin, preds))


@dataclass
class BatchResult:
    spec: BatchSpec
    r: float
    table: ScoreTable


@dataclass
class GridReport:
    results: list[BatchResult] = field(default_factory=list)

    def best(self) -> BatchResult:
        return max(self.results, key=lambda res: res.r)

    def render(self) -> str:
        """Method-by-k correlation grid, one block per topic count."""
        lines = []
        for res in self.results:
            if res.spec.approach == "wordscores":
                lines.append(f"wordscores (corpus {res.spec.variant}): r={res.r:+.4f}")
        ks = sorted({res.spec.k for res in self.results if res.spec.approach != "wordscores"})
        methods = [m for m in TREE_METHODS
                   if any(res.spec.tree_method == m and res.spec.approach != "wordscores"
                          for res in self.results)]
        if methods:
            header = "        " + "".join(f"{m:>10}" for m in methods)
            for k in ks:
                lines.append(f"with {k} topics")
                lines.append(header)
                for approach in ("lsa_trees", "lda_trees"):
                    cells = []
                    for m in methods:
                        r = [res.r for res in self.results
                             if res.spec.approach == approach
                             and res.spec.k == k and res.spec.tree_method == m]
                        cells.append(f"{r[0]:>+10.4f}" if r else " " * 10)
                    if any(c.strip() for c in cells):
                        lines.append(f"{approach.split('_')[0].upper():<8}" + "".join(cells))
        return "\n".join(lines) + "\n"


def run_batch_grid(matrices: dict[str, SparseTermMatrix], specs: list[BatchSpec],
                   training: TrainingSet, reference: ScoreTable) -> GridReport:
    """Run every spec and correlate its scores with the reference table.

    Topic features are cached across specs that share corpus, method, topic
    count and seed, so grids over tree hyperparameters stay cheap.
    """
    cache: dict = {}
    report = GridReport()
    for spec in specs:
        table = run_batch(matrices, spec, training, cache)
        report.results.append(BatchResult(spec=spec, r=pearson(table, reference), table=table))
    return report


def training_from_table(table: ScoreTable, years=None, restrict_to=None) -> TrainingSet:
    """Build a training set from a reference score table.

    ``years`` keeps only the given years; ``restrict_to`` (e.g. the corpus
    document keys) drops rows for documents that do not exist.
    """
    allowed = None if restrict_to is None else set(restrict_to)
    keys, scores = [], []
    for key, row in table.items():
        if years is not None and key.year not in years:
            continue
        if allowed is not None and key not in allowed:
            continue
        keys.append(key)
        scores.append(row.score)
    return TrainingSet(doc_keys=keys, scores=np.array(scores))
