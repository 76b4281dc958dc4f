"""Snapshot graph-convolutional classifier with explicit backward pass.

Forward:
    A_hat = D^{-1/2} (A + I) D^{-1/2}        (D = degree matrix of A + I)
    H1 = relu(A_hat X W1 + b1)               (F -> hidden)
    H2 = relu(A_hat H1 W2 + b2)              (hidden -> hidden)
    z  = mean over nodes of H2               (global mean pooling)
    h3 = relu(z W3 + b3)                     (hidden -> mlp_hidden)
    logit = h3 W4 + b4, prob = sigmoid(logit)

The adjacency fed to the model is binary with no self-loops (they are added
by the normalization); an optional weighted mode uses |rho| edge weights.
Gradients are composed by hand in reverse order; no autodiff tape exists
anywhere in the package.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from .. import tensor as tz
from ..graphs import GraphSnapshot

__all__ = [
    "gcn_normalize",
    "adjacency_from_snapshot",
    "init_gcn",
    "gcn_embed",
    "gcn_embed_backward",
    "gcn_forward",
    "gcn_backward",
]

GCN_TENSORS = ("w1", "b1", "w2", "b2", "w3", "b3", "w4", "b4")


def gcn_normalize(adj: np.ndarray) -> np.ndarray:
    """Symmetric renormalized adjacency D^{-1/2}(A+I)D^{-1/2}.

    The input must be square and symmetric with a zero diagonal and
    non-negative weights. The empty graph maps to the identity.
    """
    a = np.asarray(adj, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"adjacency must be square, got {a.shape}")
    if not np.array_equal(a, a.T):
        raise ShapeError(f"adjacency of shape {a.shape} is not symmetric")
    if np.any(np.diag(a) != 0.0):
        raise ShapeError("adjacency must have a zero diagonal (self-loops are added here)")
    if np.any(a < 0.0):
        raise ShapeError("adjacency weights must be non-negative")
    a_hat = a + np.eye(a.shape[0])
    inv_sqrt_deg = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return a_hat * np.outer(inv_sqrt_deg, inv_sqrt_deg)


def adjacency_from_snapshot(snapshot: GraphSnapshot, layers: tuple[str, ...] = ("correlation",),
                            weighted: bool = False) -> np.ndarray:
    """Union of the requested layers as a dense symmetric matrix.

    Binary by default; in weighted mode a correlation edge carries |rho|
    (sector edges stay at 1), and a pair present in several layers takes
    the maximum weight.
    """
    n = snapshot.n_nodes()
    adj = np.zeros((n, n), dtype=np.float64)
    for name in layers:
        if name not in snapshot.layers:
            raise ShapeError(f"snapshot {snapshot.date} has no layer {name!r}")
        for i, j, w in snapshot.layers[name]:
            val = abs(float(w)) if weighted else 1.0
            adj[i, j] = max(adj[i, j], val)
            adj[j, i] = adj[i, j]
    return adj


def init_gcn(rng: np.random.Generator, n_features: int, hidden: int = 32,
             mlp_hidden: int = 16) -> dict[str, np.ndarray]:
    """Glorot-uniform weights, zero biases, in a fixed draw order."""
    return {
        "w1": tz.glorot_uniform(rng, n_features, hidden),
        "b1": np.zeros(hidden),
        "w2": tz.glorot_uniform(rng, hidden, hidden),
        "b2": np.zeros(hidden),
        "w3": tz.glorot_uniform(rng, hidden, mlp_hidden),
        "b3": np.zeros(mlp_hidden),
        "w4": tz.glorot_uniform(rng, mlp_hidden, 1),
        "b4": np.zeros(1),
    }


def gcn_embed(a_hat: np.ndarray, x: np.ndarray, params: dict) -> tuple[np.ndarray, dict]:
    """Two convolutions + mean pooling; returns (embedding vector, cache)."""
    if a_hat.shape[0] != x.shape[0]:
        raise ShapeError(f"adjacency {a_hat.shape} vs features {x.shape}: node counts differ")
    ax = tz.matmul(a_hat, x)
    pre1 = tz.add(tz.matmul(ax, params["w1"]), params["b1"][None, :])
    h1 = tz.relu(pre1)
    ah1 = tz.matmul(a_hat, h1)
    pre2 = tz.add(tz.matmul(ah1, params["w2"]), params["b2"][None, :])
    h2 = tz.relu(pre2)
    z = tz.row_mean(h2)
    cache = {"a_hat": a_hat, "ax": ax, "pre1": pre1, "ah1": ah1, "pre2": pre2, "n": x.shape[0]}
    return z, cache


def gcn_embed_backward(dz: np.ndarray, cache: dict, params: dict) -> dict[str, np.ndarray]:
    """Gradients of the encoder weights given d loss / d embedding."""
    n = cache["n"]
    a_hat = cache["a_hat"]
    dh2 = np.repeat(dz[None, :], n, axis=0) / n  # mean-pool backward
    dpre2 = dh2 * tz.relu_grad(cache["pre2"])
    grads = {
        "w2": cache["ah1"].T @ dpre2,
        "b2": dpre2.sum(axis=0),
    }
    dh1 = a_hat.T @ dpre2 @ params["w2"].T
    dpre1 = dh1 * tz.relu_grad(cache["pre1"])
    grads["w1"] = cache["ax"].T @ dpre1
    grads["b1"] = dpre1.sum(axis=0)
    return grads


def _head_forward(z: np.ndarray, params: dict) -> tuple[float, float, dict]:
    zr = z[None, :]
    pre3 = zr @ params["w3"] + params["b3"][None, :]
    h3 = tz.relu(pre3)
    logit = float((h3 @ params["w4"] + params["b4"][None, :])[0, 0])
    prob = float(tz.sigmoid(np.array([logit]))[0])
    return logit, prob, {"zr": zr, "pre3": pre3, "h3": h3}


def _head_backward(dlogit: float, cache: dict, params: dict) -> tuple[dict, np.ndarray]:
    h3, pre3, zr = cache["h3"], cache["pre3"], cache["zr"]
    grads = {
        "w4": h3.T * dlogit,
        "b4": np.array([dlogit]),
    }
    dh3 = dlogit * params["w4"].T  # 1 x mlp_hidden
    dpre3 = dh3 * tz.relu_grad(pre3)
    grads["w3"] = zr.T @ dpre3
    grads["b3"] = dpre3[0]
    dz = (dpre3 @ params["w3"].T)[0]
    return grads, dz


def gcn_forward(a_hat: np.ndarray, x: np.ndarray,
                params: dict) -> tuple[np.ndarray, float, dict]:
    """Full classifier pass; returns (embedding, prob, cache)."""
    z, enc_cache = gcn_embed(a_hat, x, params)
    logit, prob, head_cache = _head_forward(z, params)
    cache = {"enc": enc_cache, "head": head_cache, "logit": logit}
    return z, prob, cache


def gcn_backward(dlogit: float, cache: dict, params: dict) -> dict[str, np.ndarray]:
    """Gradients for all eight tensors given d loss / d logit."""
    grads, dz = _head_backward(dlogit, cache["head"], params)
    grads.update(gcn_embed_backward(dz, cache["enc"], params))
    return grads
