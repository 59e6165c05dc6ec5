"""Tree-based regressors over topic features.

Implements CART-style regression trees whose splits minimize the sum of the
two subsets' mean squared errors, plus three ensembles on top of them:
bootstrap-aggregated forests, forests with randomized split thresholds, and
AdaBoost.R2 with weighted-median aggregation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from textscale.corpus import DocKey

__all__ = [
    "TreeNode",
    "EnsembleConfig",
    "EnsembleModel",
    "AdaBoostFailedError",
    "BoostRound",
    "fit_tree",
    "predict_tree",
    "fit_forest",
    "predict_forest",
    "fit_adaboost_r2",
    "predict_adaboost",
    "weighted_median",
    "RegressionTree",
    "RandomForest",
    "ExtremeRandomForest",
    "AdaBoostR2",
    "DocFeatures",
    "save_features",
    "load_features",
    "save_ensemble",
    "load_ensemble",
]

C_MODES = ("x_over_3", "sqrt_x", "all_x")
METHODS = ("single_tree", "random_forest", "extreme_forest", "adaboost_r2")

# Stand-in confidence for a boosting round that fit perfectly (max error 0):
# the usual beta formula degenerates, so the tree is kept with this fixed,
# very confident beta and boosting stops.
PERFECT_FIT_BETA = 1e-10


class AdaBoostFailedError(RuntimeError):
    """Raised when the very first boosting round has adjusted error >= 0.5."""


@dataclass
class BoostRound:
    """Diagnostic record of one boosting round."""

    weights: np.ndarray   # observation weights used this round
    d_max: float
    eps: float
    beta: float | None    # None when the round was discarded
    retained: bool


class TreeNode:
    """One node; a leaf when ``feature`` is None. Internal nodes route
    value <= threshold to the left child."""

    __slots__ = ("feature", "threshold", "left", "right", "prediction", "count")

    def __init__(self, feature=None, threshold=0.0, left=None, right=None,
                 prediction=0.0, count=0):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.prediction = prediction
        self.count = count

    @property
    def is_leaf(self):
        return self.feature is None

    def __eq__(self, other):
        if not isinstance(other, TreeNode):
            return NotImplemented
        if self.is_leaf != other.is_leaf:
            return False
        if self.is_leaf:
            return self.prediction == other.prediction and self.count == other.count
        return (
            self.feature == other.feature
            and self.threshold == other.threshold
            and self.left == other.left
            and self.right == other.right
        )


@dataclass
class EnsembleConfig:
    method: str = "random_forest"
    n_trees: int = 10000
    c_mode: str = "all_x"
    min_leaf: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.c_mode not in C_MODES:
            raise ValueError(f"unknown c_mode {self.c_mode!r}")
        if self.n_trees < 1 or self.min_leaf < 1:
            raise ValueError("n_trees and min_leaf must be at least 1")


@dataclass
class EnsembleModel:
    config: EnsembleConfig
    trees: list[TreeNode]
    boost_betas: list[float] = field(default_factory=list)

    def predict_row(self, row) -> float:
        if self.config.method == "adaboost_r2":
            return predict_adaboost(self, row)
        if self.config.method == "single_tree":
            return predict_tree(self.trees[0], row)
        return predict_forest(self, row)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.array([self.predict_row(row) for row in X])


def _subset_size(c_mode: str, n_features: int) -> int:
    if c_mode == "all_x":
        return n_features
    if c_mode == "x_over_3":
        return max(1, math.ceil(n_features / 3))
    return max(1, math.ceil(math.sqrt(n_features)))


def _node_cost(values, y, w, min_leaf, threshold):
    """Sum of the two weighted mean squared errors for one candidate split."""
    left = values <= threshold
    n_left = int(left.sum())
    if n_left < min_leaf or len(y) - n_left < min_leaf:
        return None
    cost = 0.0
    for mask in (left, ~left):
        wm = w[mask]
        total = wm.sum()
        if total > 0:
            mean = (wm @ y[mask]) / total
            cost += (wm @ (y[mask] - mean) ** 2) / total
    return cost


def _best_threshold_scan(values, y, w, min_leaf):
    """Best midpoint threshold for one feature via prefix sums.

    Returns (cost, threshold) or None when no split keeps both sides at
    min_leaf observations.
    """
    order = np.argsort(values, kind="stable")
    v = values[order]
    yw = y[order]
    ww = w[order]
    n = len(v)
    cw = np.cumsum(ww)
    cwy = np.cumsum(ww * yw)
    cwyy = np.cumsum(ww * yw * yw)
    total_w, total_wy, total_wyy = cw[-1], cwy[-1], cwyy[-1]

    positions = np.arange(min_leaf, n - min_leaf + 1)
    if len(positions) == 0:
        return None
    # only boundaries between distinct values are real splits
    positions = positions[v[positions - 1] < v[positions]]
    if len(positions) == 0:
        return None

    wl = cw[positions - 1]
    wr = total_w - wl
    # zero-weight sides contribute no error mass (possible under boosting)
    safe_wl = np.where(wl > 0, wl, 1.0)
    safe_wr = np.where(wr > 0, wr, 1.0)
    sse_l = cwyy[positions - 1] - cwy[positions - 1] ** 2 / safe_wl
    sse_r = (total_wyy - cwyy[positions - 1]) - (total_wy - cwy[positions - 1]) ** 2 / safe_wr
    cost = np.where(wl > 0, sse_l / safe_wl, 0.0) + np.where(wr > 0, sse_r / safe_wr, 0.0)
    best = int(np.argmin(cost))
    p = positions[best]
    threshold = (v[p - 1] + v[p]) / 2.0
    if threshold == v[p]:
        # adjacent floats: keep the realized partition equal to the scanned one
        threshold = v[p - 1]
    return float(cost[best]), float(threshold)


def _find_split(X, y, w, min_leaf, c_mode, randomized_threshold, rng):
    n, n_features = X.shape
    if n < 2 * min_leaf or np.all(y == y[0]):
        return None
    size = _subset_size(c_mode, n_features)
    if size >= n_features:
        candidates = np.arange(n_features)
    else:
        candidates = rng.choice(n_features, size=size, replace=False)
    best = None
    for j in candidates:
        values = X[:, j]
        if randomized_threshold:
            lo, hi = values.min(), values.max()
            if lo == hi:
                continue
            threshold = float(rng.uniform(lo, hi))
            cost = _node_cost(values, y, w, min_leaf, threshold)
            if cost is None:
                continue
            found = (cost, int(j), threshold)
        else:
            scan = _best_threshold_scan(values, y, w, min_leaf)
            if scan is None:
                continue
            found = (scan[0], int(j), scan[1])
        if best is None or found[0] < best[0]:
            best = found
    return best


def fit_tree(X, y, *, min_leaf=5, c_mode="all_x", randomized_threshold=False,
             rng=None, sample_weight=None) -> TreeNode:
    """Grow one regression tree.

    At every node a fresh candidate-feature subset of size given by
    ``c_mode`` is drawn; thresholds are either the best midpoint between
    consecutive distinct values or, when ``randomized_threshold`` is set,
    one uniform draw per feature between that feature's min and max. Splits
    must leave at least ``min_leaf`` observations on each side; nodes that
    cannot split become leaves predicting their (weighted) mean.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
        raise ValueError("X must be 2-D with one y per row")
    if rng is None:
        rng = np.random.default_rng(0)
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)

    def leaf(idx):
        wi = w[idx]
        total = wi.sum()
        pred = float((wi @ y[idx]) / total) if total > 0 else float(np.mean(y[idx]))
        return TreeNode(prediction=pred, count=len(idx))

    root_idx = np.arange(len(y))
    root = TreeNode()
    stack = [(root, root_idx)]
    while stack:
        node, idx = stack.pop()
        split = _find_split(X[idx], y[idx], w[idx], min_leaf, c_mode,
                            randomized_threshold, rng)
        if split is None:
            fallback = leaf(idx)
            node.prediction, node.count = fallback.prediction, fallback.count
            continue
        _, j, threshold = split
        left_mask = X[idx, j] <= threshold
        node.feature = j
        node.threshold = threshold
        node.count = len(idx)
        node.left = TreeNode()
        node.right = TreeNode()
        # right pushed first so the left subtree is grown first (stable rng order)
        stack.append((node.right, idx[~left_mask]))
        stack.append((node.left, idx[left_mask]))
    return root


def predict_tree(tree: TreeNode, row) -> float:
    """Route one feature vector to its leaf mean. Values equal to a
    threshold go left."""
    node = tree
    while not node.is_leaf:
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node.prediction


def _tree_rngs(seed: int, n: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def fit_forest(X, y, config: EnsembleConfig, extreme: bool = False,
               bootstrap: bool = True) -> EnsembleModel:
    """Grow ``config.n_trees`` trees on bootstrap samples of population size.

    ``extreme`` switches on randomized thresholds. Each tree draws from its
    own generator derived from the master seed, so results are independent
    of any parallel scheduling.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    trees = []
    for rng in _tree_rngs(config.seed, config.n_trees):
        idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(
            fit_tree(
                X[idx], y[idx], min_leaf=config.min_leaf, c_mode=config.c_mode,
                randomized_threshold=extreme, rng=rng,
            )
        )
    return EnsembleModel(config=config, trees=trees)


def predict_forest(model: EnsembleModel, row) -> float:
    """Arithmetic mean of the member trees' predictions."""
    return float(np.mean([predict_tree(t, row) for t in model.trees]))


def fit_adaboost_r2(X, y, config: EnsembleConfig, trace: list | None = None) -> EnsembleModel:
    """Boosted regression trees with multiplicative weight updates.

    Each round fits a weighted tree on all observations, rescales absolute
    errors by the round's maximum, and computes the weighted error rate.
    Rounds with error rate >= 0.5 are discarded and stop the process; a
    perfect round keeps its tree with a fixed confident beta and stops.
    Pass a list as ``trace`` to collect one :class:`BoostRound` per round.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    w = np.full(n, 1.0 / n)
    trees: list[TreeNode] = []
    betas: list[float] = []
    for rng in _tree_rngs(config.seed, config.n_trees):
        tree = fit_tree(
            X, y, min_leaf=config.min_leaf, c_mode=config.c_mode,
            randomized_threshold=False, rng=rng, sample_weight=w,
        )
        pred = np.array([predict_tree(tree, row) for row in X])
        abs_err = np.abs(y - pred)
        d_max = abs_err.max()
        if d_max == 0.0:
            trees.append(tree)
            betas.append(PERFECT_FIT_BETA)
            if trace is not None:
                trace.append(BoostRound(weights=w.copy(), d_max=0.0, eps=0.0,
                                        beta=PERFECT_FIT_BETA, retained=True))
            break
        e = abs_err / d_max
        eps = float(e @ w)
        if eps >= 0.5:
            if trace is not None:
                trace.append(BoostRound(weights=w.copy(), d_max=float(d_max),
                                        eps=eps, beta=None, retained=False))
            if not trees:
                raise AdaBoostFailedError(
                    f"adaboost failed: first tree has adjusted error {eps:.4f} >= 0.5"
                )
            break
        beta = eps / (1.0 - eps)
        trees.append(tree)
        betas.append(beta)
        if trace is not None:
            trace.append(BoostRound(weights=w.copy(), d_max=float(d_max),
                                    eps=eps, beta=beta, retained=True))
        w = w * beta ** (1.0 - e)
        w = w / w.sum()
    return EnsembleModel(config=config, trees=trees, boost_betas=betas)


def predict_adaboost(model: EnsembleModel, row) -> float:
    """Weighted median of the member predictions with ln(1/beta) weights."""
    preds = [predict_tree(t, row) for t in model.trees]
    weights = [math.log(1.0 / b) for b in model.boost_betas]
    return weighted_median(preds, weights)


def weighted_median(predictions, weights) -> float:
    """Smallest value whose cumulative weight reaches half the total.

    The exact-half boundary resolves to the lower value.
    """
    if len(predictions) == 0:
        raise ValueError("weighted_median of empty input")
    if len(predictions) != len(weights):
        raise ValueError("predictions and weights must have equal length")
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")
    predictions = np.asarray(predictions, dtype=np.float64)
    order = np.argsort(predictions, kind="stable")
    cum = np.cumsum(weights[order])
    half = cum[-1] / 2.0
    idx = int(np.searchsorted(cum, half, side="left"))
    return float(predictions[order[idx]])


# ---------------------------------------------------------------------------
# Estimator facades


class _TreeEstimatorBase(BaseEstimator, RegressorMixin):
    def predict(self, X):
        if not hasattr(self, "model_"):
            raise ValueError("model is not fitted")
        return self.model_.predict(X)

    @staticmethod
    def _validate(X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be 2-D (samples x features)")
        if len(X) != len(y):
            raise ValueError(f"{len(X)} samples but {len(y)} targets")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValueError("X and y must be finite")
        return X, y


class RegressionTree(_TreeEstimatorBase):
    """Single CART regression tree."""

    def __init__(self, min_leaf=5, c_mode="all_x", seed=0):
        self.min_leaf = min_leaf
        self.c_mode = c_mode
        self.seed = seed

    def fit(self, X, y):
        X, y = self._validate(X, y)
        config = EnsembleConfig(method="single_tree", n_trees=1,
                                c_mode=self.c_mode, min_leaf=self.min_leaf, seed=self.seed)
        tree = fit_tree(X, y, min_leaf=self.min_leaf, c_mode=self.c_mode,
                        rng=np.random.default_rng(self.seed))
        self.model_ = EnsembleModel(config=config, trees=[tree])
        return self


class RandomForest(_TreeEstimatorBase):
    """Bootstrap-aggregated regression trees."""

    method = "random_forest"
    extreme = False

    def __init__(self, n_trees=10000, c_mode="all_x", min_leaf=5, seed=0):
        self.n_trees = n_trees
        self.c_mode = c_mode
        self.min_leaf = min_leaf
        self.seed = seed

    def fit(self, X, y):
        X, y = self._validate(X, y)
        config = EnsembleConfig(method=self.method, n_trees=self.n_trees,
                                c_mode=self.c_mode, min_leaf=self.min_leaf, seed=self.seed)
        self.model_ = fit_forest(X, y, config, extreme=self.extreme)
        return self


class ExtremeRandomForest(RandomForest):
    """Forest whose candidate thresholds are drawn uniformly at random."""

    method = "extreme_forest"
    extreme = True


class AdaBoostR2(_TreeEstimatorBase):
    """Boosted trees with weighted-median prediction."""

    def __init__(self, n_trees=10000, c_mode="all_x", min_leaf=5, seed=0):
        self.n_trees = n_trees
        self.c_mode = c_mode
        self.min_leaf = min_leaf
        self.seed = seed

    def fit(self, X, y):
        X, y = self._validate(X, y)
        config = EnsembleConfig(method="adaboost_r2", n_trees=self.n_trees,
                                c_mode=self.c_mode, min_leaf=self.min_leaf, seed=self.seed)
        self.model_ = fit_adaboost_r2(X, y, config)
        return self


# ---------------------------------------------------------------------------
# Feature tables and model serialization


@dataclass
class DocFeatures:
    """Per-document feature rows, aligned with their keys."""

    doc_keys: list[DocKey]
    x: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        if len(self.doc_keys) != self.x.shape[0]:
            raise ValueError("one feature row per document key required")

    def rows_for(self, keys) -> np.ndarray:
        index = {k: i for i, k in enumerate(self.doc_keys)}
        return self.x[[index[k] for k in keys]]


def save_features(features: DocFeatures, path: str | Path) -> None:
    """Text format: header ``n k``, then ``entity year f1 .. fk`` per document."""
    n, k = features.x.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{n} {k}\n")
        for key, row in zip(features.doc_keys, features.x):
            fh.write(f"{key.entity} {key.year} " + " ".join(f"{v:.17g}" for v in row) + "\n")


def load_features(path: str | Path) -> DocFeatures:
    with open(path, encoding="utf-8") as fh:
        n, k = (int(x) for x in fh.readline().split())
        keys, rows = [], []
        for _ in range(n):
            parts = fh.readline().split()
            keys.append(DocKey(entity=parts[0], year=int(parts[1])))
            rows.append([float(v) for v in parts[2:]])
    x = np.array(rows, dtype=np.float64).reshape(n, k)
    return DocFeatures(doc_keys=keys, x=x)


def _write_node(fh, node: TreeNode):
    # pre-order listing
    if node.is_leaf:
        fh.write(f"l {node.prediction:.17g} {node.count}\n")
    else:
        fh.write(f"s {node.feature} {node.threshold:.17g} {node.count}\n")
        _write_node(fh, node.left)
        _write_node(fh, node.right)


def _count_nodes(node: TreeNode) -> int:
    if node.is_leaf:
        return 1
    return 1 + _count_nodes(node.left) + _count_nodes(node.right)


def save_ensemble(model: EnsembleModel, path: str | Path) -> None:
    """Text format: config header, beta line, then each tree pre-order."""
    cfg = model.config
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{cfg.method} {cfg.c_mode} {cfg.min_leaf} {cfg.seed} "
                 f"{cfg.n_trees} {len(model.trees)}\n")
        fh.write(" ".join(f"{b:.17g}" for b in model.boost_betas) + "\n")
        for tree in model.trees:
            fh.write(f"tree {_count_nodes(tree)}\n")
            _write_node(fh, tree)


def _read_node(lines) -> TreeNode:
    parts = next(lines).split()
    if parts[0] == "l":
        return TreeNode(prediction=float(parts[1]), count=int(parts[2]))
    node = TreeNode(feature=int(parts[1]), threshold=float(parts[2]), count=int(parts[3]))
    node.left = _read_node(lines)
    node.right = _read_node(lines)
    return node


def load_ensemble(path: str | Path) -> EnsembleModel:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        method, c_mode, min_leaf, seed, n_trees, n_fitted = (
            header[0], header[1], int(header[2]), int(header[3]),
            int(header[4]), int(header[5]),
        )
        beta_line = fh.readline().split()
        betas = [float(b) for b in beta_line]
        lines = iter(fh.read().splitlines())
        trees = []
        for _ in range(n_fitted):
            marker = next(lines).split()
            if marker[0] != "tree":
                raise ValueError("malformed ensemble file")
            trees.append(_read_node(lines))
    config = EnsembleConfig(method=method, n_trees=n_trees, c_mode=c_mode,
                            min_leaf=min_leaf, seed=seed)
    return EnsembleModel(config=config, trees=trees, boost_betas=betas)
