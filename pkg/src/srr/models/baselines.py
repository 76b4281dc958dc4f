"""Day-level baseline models: logistic regression and a random forest.

Both consume one vector per trading day: the cross-sectional mean and
sample standard deviation (ddof=1) of each node feature, interleaved as
(mean_f, std_f) per feature, plus the macro overlay when configured.
Targets are the graph-level crash labels.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError, NumericalError
from .. import tensor as tz
from ..features import FeaturePanel

__all__ = [
    "day_feature_names",
    "baseline_day_features",
    "day_feature_matrix",
    "logistic_fit",
    "logistic_predict",
    "gini",
    "forest_fit",
    "forest_predict",
]


# -- day features ----------------------------------------------------------

def day_feature_names(panel: FeaturePanel) -> list[str]:
    names = []
    for n in panel.names:
        names.extend([f"mean_{n}", f"std_{n}"])
    names.extend(panel.macro_names)
    return names


def baseline_day_features(panel: FeaturePanel, t: int) -> np.ndarray:
    """Per-day baseline input at date index t."""
    x = panel.features[:, t, :]
    if x.shape[0] < 2:
        raise DataError("day features need >= 2 tickers for a cross-sectional std")
    out = np.empty(2 * x.shape[1])
    out[0::2] = x.mean(axis=0)
    out[1::2] = x.std(axis=0, ddof=1)
    if panel.macro is not None:
        out = np.concatenate([out, panel.macro[t]])
    return out


def day_feature_matrix(panel: FeaturePanel, date_indices: list[int] | np.ndarray) -> np.ndarray:
    return np.stack([baseline_day_features(panel, t) for t in date_indices])


# -- logistic regression ---------------------------------------------------

def logistic_fit(x: np.ndarray, y: np.ndarray, lr: float = 0.05, max_epochs: int = 2000,
                 tol: float = 1e-6) -> tuple[np.ndarray, float]:
    """Full-batch Adam on mean BCE from a zero start.

    Stops at max_epochs or when the gradient norm drops below tol.
    Returns (weights, bias).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise DataError(f"logistic_fit: X {x.shape} does not match y of length {y.size}")
    w = np.zeros(x.shape[1])
    b = 0.0
    state = tz.AdamState(lr=lr)
    for _ in range(max_epochs):
        probs = tz.sigmoid(x @ w + b)
        _, dlogits = tz.bce_loss(probs, y)
        grad_w = x.T @ dlogits
        grad_b = float(dlogits.sum())
        if float(np.sqrt(grad_w @ grad_w + grad_b * grad_b)) < tol:
            break
        new = tz.adam_step({"w": w, "b": np.array([b])},
                           {"w": grad_w, "b": np.array([grad_b])}, state)
        w, b = new["w"], float(new["b"][0])
    return w, b


def logistic_predict(w: np.ndarray, b: float, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[1] != w.size:
        raise DataError(f"logistic_predict: X has {x.shape[1]} features, model has {w.size}")
    return tz.sigmoid(x @ w + b)


# -- random forest ---------------------------------------------------------

def gini(labels: np.ndarray) -> float:
    """Gini impurity 1 - p0^2 - p1^2 of a binary label vector."""
    y = np.asarray(labels)
    if y.size == 0:
        return 0.0
    p1 = float(np.count_nonzero(y)) / y.size
    return 1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1)


def _grow_tree(x: np.ndarray, y: np.ndarray, rng: np.random.Generator, max_depth: int,
               min_leaf: int, n_root: int, importance: np.ndarray) -> list[list[float]]:
    """CART with per-node random feature subsets; returns the node table.

    Node row layout: [is_leaf, feature, threshold, left, right, p0, p1].
    Samples with value <= threshold go left. Ties in impurity are broken
    toward the lowest feature index, then the lowest threshold, so a tree
    is a pure function of (data, rng draws).
    """
    n_features = x.shape[1]
    m_try = max(1, int(np.sqrt(n_features)))
    nodes: list[list[float]] = []

    def leaf(idx: np.ndarray) -> int:
        p1 = float(np.count_nonzero(y[idx])) / idx.size
        nodes.append([1.0, -1.0, 0.0, -1.0, -1.0, 1.0 - p1, p1])
        return len(nodes) - 1

    def best_split(idx: np.ndarray) -> tuple[int, float, float] | None:
        node_gini = gini(y[idx])
        if node_gini == 0.0:
            return None
        best: tuple[float, int, float] | None = None  # (weighted gini, feature, threshold)
        candidates = np.sort(rng.choice(n_features, size=m_try, replace=False))
        n_node = idx.size
        total_pos = int(np.count_nonzero(y[idx]))
        for f in candidates:
            vals = x[idx, f]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            sy = y[idx][order]
            pos_left = 0
            for s in range(n_node - 1):
                pos_left += int(sy[s])
                if sv[s] == sv[s + 1]:
                    continue  # not a boundary between distinct values
                n_l = s + 1
                n_r = n_node - n_l
                if n_l < min_leaf or n_r < min_leaf:
                    continue
                p1_l = pos_left / n_l
                p1_r = (total_pos - pos_left) / n_r
                g_l = 1.0 - p1_l * p1_l - (1.0 - p1_l) * (1.0 - p1_l)
                g_r = 1.0 - p1_r * p1_r - (1.0 - p1_r) * (1.0 - p1_r)
                weighted = (n_l * g_l + n_r * g_r) / n_node
                if best is None or weighted < best[0]:
                    best = (weighted, int(f), float(0.5 * (sv[s] + sv[s + 1])))
        if best is None or best[0] >= node_gini:
            return None
        return best[1], best[2], node_gini - best[0]

    def grow(idx: np.ndarray, depth: int) -> int:
        if depth >= max_depth or idx.size < 2 * min_leaf:
            return leaf(idx)
        found = best_split(idx)
        if found is None:
            return leaf(idx)
        feature, threshold, decrease = found
        importance[feature] += (idx.size / n_root) * decrease
        mask = x[idx, feature] <= threshold
        pos = len(nodes)
        nodes.append([0.0, float(feature), threshold, -1.0, -1.0, 0.0, 0.0])
        nodes[pos][3] = float(grow(idx[mask], depth + 1))
        nodes[pos][4] = float(grow(idx[~mask], depth + 1))
        return pos

    grow(np.arange(x.shape[0]), 0)
    return nodes


def forest_fit(x: np.ndarray, y: np.ndarray, n_trees: int = 50, max_depth: int = 6,
               min_leaf: int = 2, seed: int = 0) -> dict[str, np.ndarray]:
    """Bagged CART ensemble; returns the packed parameter dict.

    Tree t draws its bootstrap resample and feature subsets from the
    derived stream (seed, tree index), so the whole forest is a pure
    function of (data, seed). ``feature_importance`` holds the mean
    impurity decrease per input feature across trees.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int8).reshape(-1)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise DataError(f"forest_fit: X {x.shape} does not match y of length {y.size}")
    if x.shape[0] < 2:
        raise DataError("forest_fit: need at least 2 samples")
    if n_trees < 1:
        raise DataError(f"forest_fit: n_trees must be >= 1, got {n_trees}")
    params: dict[str, np.ndarray] = {}
    importance = np.zeros(x.shape[1])
    for t in range(n_trees):
        rng = tz.seeded_rng(seed, t)
        idx = rng.integers(0, x.shape[0], size=x.shape[0])
        tree_importance = np.zeros(x.shape[1])
        nodes = _grow_tree(x[idx], y[idx], rng, max_depth, min_leaf, idx.size, tree_importance)
        params[f"tree_{t:04d}"] = np.asarray(nodes, dtype=np.float64)
        importance += tree_importance
    params["feature_importance"] = importance / n_trees
    return params


def _tree_prob(nodes: np.ndarray, row: np.ndarray) -> float:
    i = 0
    for _ in range(nodes.shape[0] + 1):
        node = nodes[i]
        if node[0] == 1.0:
            return float(node[6])
        i = int(node[3]) if row[int(node[1])] <= node[2] else int(node[4])
    raise NumericalError("malformed tree: traversal did not reach a leaf")


def forest_predict(params: dict[str, np.ndarray], x: np.ndarray) -> np.ndarray:
    """Mean leaf class-1 probability across trees, per row of X."""
    x = np.asarray(x, dtype=np.float64)
    trees = [params[k] for k in sorted(params) if k.startswith("tree_")]
    if not trees:
        raise DataError("forest_predict: parameter dict holds no trees")
    out = np.zeros(x.shape[0])
    for nodes in trees:
        out += [_tree_prob(nodes, row) for row in x]
    return out / len(trees)
