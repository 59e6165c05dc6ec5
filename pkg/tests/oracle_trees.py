"""Independent reference implementations for the tree tests: exhaustive
split scans and a second, recursive tree/forest used as an oracle."""

import numpy as np


def oracle_split_cost(y_left, y_right):
    """Plain sum of the two subsets' mean squared errors."""
    cost = 0.0
    for part in (y_left, y_right):
        cost += float(np.mean((part - part.mean()) ** 2))
    return cost


def oracle_best_cost(X, y, min_leaf):
    """Exhaustive scan over every (feature, midpoint) split; None if no
    split keeps min_leaf observations on both sides."""
    best = None
    n = len(y)
    for j in range(X.shape[1]):
        vals = np.unique(X[:, j])
        for a, b in zip(vals, vals[1:]):
            s = (a + b) / 2.0
            if s == b:
                s = a
            left = X[:, j] <= s
            nl = int(left.sum())
            if nl < min_leaf or n - nl < min_leaf:
                continue
            cost = oracle_split_cost(y[left], y[~left])
            if best is None or cost < best:
                best = cost
    return best


def replay_nodes(tree, X):
    """Pair every node of a fitted tree with the training rows reaching it."""
    out = []

    def walk(node, idx):
        out.append((node, idx))
        if not node.is_leaf:
            mask = X[idx, node.feature] <= node.threshold
            walk(node.left, idx[mask])
            walk(node.right, idx[~mask])

    walk(tree, np.arange(len(X)))
    return out


def ref_fit_tree(X, y, min_leaf):
    """Second, recursive tree implementation (tuples as nodes)."""
    if len(y) < 2 * min_leaf or np.all(y == y[0]):
        return float(np.mean(y))
    best = None
    for j in range(X.shape[1]):
        vals = np.unique(X[:, j])
        for a, b in zip(vals, vals[1:]):
            s = (a + b) / 2.0
            if s == b:
                s = a
            left = X[:, j] <= s
            nl = int(left.sum())
            if nl < min_leaf or len(y) - nl < min_leaf:
                continue
            cost = oracle_split_cost(y[left], y[~left])
            if best is None or cost < best[0]:
                best = (cost, j, s)
    if best is None:
        return float(np.mean(y))
    _, j, s = best
    left = X[:, j] <= s
    return (j, s, ref_fit_tree(X[left], y[left], min_leaf),
            ref_fit_tree(X[~left], y[~left], min_leaf))


def ref_predict(node, row):
    while isinstance(node, tuple):
        j, s, left, right = node
        node = left if row[j] <= s else right
    return node
