"""Chronological splitting, sample assembly, and training loops.

The split is strictly chronological: the first floor(ratio * T) dates are
the training block, the rest the test block. Because labels peek up to
``horizon`` days forward, the last ``horizon`` dates of the training block
are embargoed (no training sample's label window may cross into the test
range). Model families and their sample grids:

    logistic / forest   one sample per labeled day (daily grid)
    gcn                 one sample per labeled snapshot on the stride grid
    temporal            one sample per sequence of k consecutive sampled
                        snapshots whose final snapshot is labeled

GNNs train with seeded shuffled mini-batches, Adam, and a fixed epoch
count; the parameters from the best-mean-train-loss epoch are retained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericalError
from . import tensor as tz
from .features import FeaturePanel
from .graphs import GraphSnapshot, build_sequences
from .models import (
    ModelState,
    adjacency_from_snapshot,
    baselines,
    gcn_normalize,
    init_gcn,
    init_gru,
    gcn_forward,
    gcn_backward,
    temporal_forward,
    temporal_backward,
)
from .models.baselines import (
    day_feature_matrix,
    day_feature_names,
    forest_fit,
    forest_predict,
    logistic_fit,
    logistic_predict,
)

__all__ = [
    "SplitPlan",
    "chronological_split",
    "TrainSettings",
    "DataBundle",
    "train",
    "predict_scores",
]


@dataclass
class SplitPlan:
    """Date ranges for one chronological train/test split."""

    train_dates: list[str]  # embargoed: the last `horizon` pre-boundary dates removed
    test_dates: list[str]
    ratio: float
    horizon: int

    @property
    def train_end(self) -> str:
        return self.train_dates[-1]

    @property
    def test_start(self) -> str:
        return self.test_dates[0]

    def side(self, date: str) -> str | None:
        if date <= self.train_end:
            return "train"
        if date >= self.test_start:
            return "test"
        return None  # inside the embargo gap


def chronological_split(dates: list[str], ratio: float = 0.8, horizon: int = 60) -> SplitPlan:
    """Split a sorted date list; the embargo trims the train tail only."""
    if not (0.0 < ratio < 1.0):
        raise DataError(f"split ratio must be in (0, 1), got {ratio}")
    if horizon < 0:
        raise DataError(f"horizon must be >= 0, got {horizon}")
    n_train = math.floor(ratio * len(dates))
    n_kept = n_train - horizon
    if n_kept < 1 or n_train >= len(dates):
        raise DataError(
            f"cannot split {len(dates)} dates at ratio {ratio} with a {horizon}-day embargo"
        )
    return SplitPlan(
        train_dates=list(dates[:n_kept]),
        test_dates=list(dates[n_train:]),
        ratio=ratio,
        horizon=horizon,
    )


@dataclass
class TrainSettings:
    """Hyperparameters for every model family, with the toolkit defaults."""

    gcn_hidden: int = 32
    mlp_hidden: int = 16
    gru_hidden: int = 64
    k: int = 5
    stride: int = 5
    epochs: int = 50
    batch_size: int = 8
    lr: float = 1e-3
    loss: str = "bce"  # "bce" | "focal"
    focal_gamma: float = 2.0
    weighted_adjacency: bool = False
    layers: tuple[str, ...] = ("correlation",)
    logistic_lr: float = 0.05
    logistic_epochs: int = 2000
    logistic_tol: float = 1e-6
    forest_trees: int = 50
    forest_max_depth: int = 6
    forest_min_leaf: int = 2

    def loss_fn(self):
        if self.loss == "bce":
            return tz.bce_loss
        if self.loss == "focal":
            gamma = self.focal_gamma
            return lambda probs, targets: tz.focal_loss(probs, targets, gamma)
        raise DataError(f"unknown loss {self.loss!r}, expected bce or focal")


@dataclass
class DataBundle:
    """Everything the training and evaluation code needs for one run."""

    panel: FeaturePanel  # standardized features with labels attached
    snapshots: list[GraphSnapshot]
    split: SplitPlan
    macro_names: list[str] = field(default_factory=list)


# -- sample assembly ---------------------------------------------------------

def _labeled_day_indices(bundle: DataBundle, side: str) -> list[int]:
    panel, split = bundle.panel, bundle.split
    return [
        t for t, d in enumerate(panel.dates)
        if panel.label_valid[t] and split.side(d) == side
    ]


def _day_xy(bundle: DataBundle, side: str) -> tuple[np.ndarray, np.ndarray, list[str]]:
    idx = _labeled_day_indices(bundle, side)
    if not idx:
        raise DataError(f"no labeled {side} days available")
    x = day_feature_matrix(bundle.panel, idx)
    y = bundle.panel.graph_labels[idx].astype(np.float64)
    return x, y, [bundle.panel.dates[t] for t in idx]


def _normalized_inputs(bundle: DataBundle, settings: TrainSettings) -> dict[int, tuple]:
    """id(snapshot) -> (A_hat, X); shared across overlapping sequences."""
    table = {}
    for snap in bundle.snapshots:
        adj = adjacency_from_snapshot(snap, layers=settings.layers,
                                      weighted=settings.weighted_adjacency)
        table[id(snap)] = (gcn_normalize(adj), snap.node_features)
    return table


def _gcn_samples(bundle: DataBundle, settings: TrainSettings, side: str,
                 inputs: dict[int, tuple]) -> list[tuple]:
    out = []
    for snap in bundle.snapshots[::settings.stride]:
        if snap.graph_label is None or bundle.split.side(snap.date) != side:
            continue
        a_hat, x = inputs[id(snap)]
        out.append((a_hat, x, float(snap.graph_label), snap.date))
    return out


def _temporal_samples(bundle: DataBundle, settings: TrainSettings, side: str,
                      inputs: dict[int, tuple]) -> list[tuple]:
    out = []
    for seq in build_sequences(bundle.snapshots, k=settings.k, stride=settings.stride):
        if seq.graph_label is None or bundle.split.side(seq.date) != side:
            continue
        pairs = [inputs[id(s)] for s in seq.snapshots]
        out.append((pairs, float(seq.graph_label), seq.date))
    return out


def _check_two_classes(labels, kind: str) -> None:
    values = sorted({float(v) for v in labels})
    if len(values) < 2:
        raise DataError(f"{kind}: training labels are single-class (saw only {values})")


# -- mini-batch engine --------------------------------------------------------

def _train_minibatch(samples: list, params: dict, forward, backward, settings: TrainSettings,
                     seed: int, kind: str) -> tuple[dict, list[float], int]:
    """Shared shuffled-mini-batch Adam loop for both GNN families.

    ``forward(sample, params) -> (prob, cache)``;
    ``backward(dlogit, cache, params) -> grads``.
    Returns (best parameters, per-epoch mean losses, best epoch index).
    """
    loss_fn = settings.loss_fn()
    opt = tz.AdamState(lr=settings.lr)
    rng = tz.seeded_rng(seed, 11)
    n = len(samples)
    targets_all = np.array([s[-2] if isinstance(s[0], list) else s[2] for s in samples])
    best_loss = np.inf
    best_params = {k: v.copy() for k, v in params.items()}
    best_epoch = -1
    history: list[float] = []
    for epoch in range(settings.epochs):
        perm = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, settings.batch_size):
            chunk = perm[start:start + settings.batch_size]
            probs, caches = [], []
            for s_idx in chunk:
                prob, cache = forward(samples[s_idx], params)
                probs.append(prob)
                caches.append(cache)
            batch_targets = targets_all[chunk]
            loss, dlogits = loss_fn(np.array(probs), batch_targets)
            if not np.isfinite(loss):
                raise NumericalError(
                    f"{kind}: training diverged at epoch {epoch}, batch {start // settings.batch_size}"
                    f" (loss={loss!r})"
                )
            grads = None
            for dlogit, cache in zip(dlogits, caches):
                g = backward(float(dlogit), cache, params)
                if grads is None:
                    grads = g
                else:
                    for name in grads:
                        grads[name] += g[name]
            params = tz.adam_step(params, grads, opt)
            epoch_loss += loss * len(chunk)
        epoch_loss /= n
        history.append(float(epoch_loss))
        if epoch_loss < best_loss:
            best_loss = epoch_loss
            best_params = {k: v.copy() for k, v in params.items()}
            best_epoch = epoch
    return best_params, history, best_epoch


# -- per-kind training --------------------------------------------------------

def _split_param_groups(params: dict) -> tuple[dict, dict]:
    gcn = {k: v for k, v in params.items() if k in ("w1", "b1", "w2", "b2", "w3", "b3", "w4", "b4")}
    gru = {k: v for k, v in params.items() if k not in gcn}
    return gcn, gru


def train(kind: str, bundle: DataBundle, settings: TrainSettings, seed: int) -> tuple[ModelState, dict]:
    """Fit one model family; returns (state, training log)."""
    std = bundle.panel.standardization
    std_ref = std.to_dict() if std is not None else None
    n_feat = bundle.panel.n_features + (0 if bundle.panel.macro is None else bundle.panel.macro.shape[1])

    if kind == "logistic":
        x, y, _ = _day_xy(bundle, "train")
        _check_two_classes(y, kind)
        w, b = logistic_fit(x, y, lr=settings.logistic_lr,
                            max_epochs=settings.logistic_epochs, tol=settings.logistic_tol)
        state = ModelState(
            kind=kind, params={"w": w, "b": np.array([b])},
            hyper={"lr": settings.logistic_lr, "max_epochs": settings.logistic_epochs,
                   "tol": settings.logistic_tol,
                   "inputs": day_feature_names(bundle.panel)},
            seed=seed, standardization=std_ref,
        )
        return state, {"kind": kind, "samples": int(y.size)}

    if kind == "forest":
        x, y, _ = _day_xy(bundle, "train")
        _check_two_classes(y, kind)
        params = forest_fit(x, y, n_trees=settings.forest_trees,
                            max_depth=settings.forest_max_depth,
                            min_leaf=settings.forest_min_leaf, seed=seed)
        state = ModelState(
            kind=kind, params=params,
            hyper={"n_trees": settings.forest_trees, "max_depth": settings.forest_max_depth,
                   "min_leaf": settings.forest_min_leaf,
                   "inputs": day_feature_names(bundle.panel)},
            seed=seed, standardization=std_ref,
            bookkeeping=("feature_importance",),
        )
        return state, {"kind": kind, "samples": int(y.size)}

    inputs = _normalized_inputs(bundle, settings)

    if kind == "gcn":
        samples = _gcn_samples(bundle, settings, "train", inputs)
        if not samples:
            raise DataError("gcn: no labeled training snapshots on the stride grid")
        _check_two_classes([s[2] for s in samples], kind)
        params = init_gcn(tz.seeded_rng(seed, 1), n_feat, settings.gcn_hidden, settings.mlp_hidden)

        def forward(sample, p):
            a_hat, x, _, _ = sample
            _, prob, cache = gcn_forward(a_hat, x, p)
            return prob, cache

        best, history, best_epoch = _train_minibatch(
            samples, params, forward, gcn_backward, settings, seed, kind)
        state = ModelState(
            kind=kind, params=best,
            hyper={"hidden": settings.gcn_hidden, "mlp_hidden": settings.mlp_hidden,
                   "epochs": settings.epochs, "batch_size": settings.batch_size,
                   "lr": settings.lr, "loss": settings.loss, "focal_gamma": settings.focal_gamma,
                   "stride": settings.stride, "n_features": n_feat,
                   "weighted_adjacency": settings.weighted_adjacency,
                   "layers": list(settings.layers)},
            seed=seed, standardization=std_ref,
        )
        return state, {"kind": kind, "samples": len(samples), "epoch_loss": history,
                       "best_epoch": best_epoch}

    if kind == "temporal":
        samples = _temporal_samples(bundle, settings, "train", inputs)
        if not samples:
            raise DataError("temporal: no labeled training sequences on the stride grid")
        _check_two_classes([s[1] for s in samples], kind)
        params = init_gcn(tz.seeded_rng(seed, 1), n_feat, settings.gcn_hidden, settings.mlp_hidden)
        params = {k: v for k, v in params.items() if k in ("w1", "b1", "w2", "b2")}
        params.update(init_gru(tz.seeded_rng(seed, 2), settings.gcn_hidden, settings.gru_hidden))

        def forward(sample, p):
            pairs, _, _ = sample
            gcn_p, gru_p = _split_param_groups(p)
            return temporal_forward(pairs, gcn_p, gru_p)

        def backward(dlogit, cache, p):
            gcn_p, gru_p = _split_param_groups(p)
            g_gcn, g_gru = temporal_backward(dlogit, cache, gcn_p, gru_p)
            g_gcn.update(g_gru)
            return g_gcn

        best, history, best_epoch = _train_minibatch(
            samples, params, forward, backward, settings, seed, kind)
        state = ModelState(
            kind=kind, params=best,
            hyper={"hidden": settings.gcn_hidden, "gru_hidden": settings.gru_hidden,
                   "k": settings.k, "stride": settings.stride,
                   "epochs": settings.epochs, "batch_size": settings.batch_size,
                   "lr": settings.lr, "loss": settings.loss, "focal_gamma": settings.focal_gamma,
                   "n_features": n_feat,
                   "weighted_adjacency": settings.weighted_adjacency,
                   "layers": list(settings.layers)},
            seed=seed, standardization=std_ref,
        )
        return state, {"kind": kind, "samples": len(samples), "epoch_loss": history,
                       "best_epoch": best_epoch}

    raise DataError(f"unknown model kind {kind!r}")


# -- scoring -------------------------------------------------------------------

def predict_scores(state: ModelState, bundle: DataBundle, settings: TrainSettings,
                   side: str = "test") -> tuple[list[str], np.ndarray, np.ndarray]:
    """Score the given side of the split on the model's own sample grid.

    Returns (dates, scores, labels), chronologically ordered.
    """
    if state.kind == "logistic":
        x, y, dates = _day_xy(bundle, side)
        return dates, logistic_predict(state.params["w"], float(state.params["b"][0]), x), y

    if state.kind == "forest":
        x, y, dates = _day_xy(bundle, side)
        return dates, forest_predict(state.params, x), y

    inputs = _normalized_inputs(bundle, settings)
    if state.kind == "gcn":
        samples = _gcn_samples(bundle, settings, side, inputs)
        if not samples:
            raise DataError(f"gcn: no labeled {side} snapshots on the stride grid")
        dates = [s[3] for s in samples]
        y = np.array([s[2] for s in samples])
        scores = np.array([gcn_forward(a, x, state.params)[1] for a, x, _, _ in samples])
        return dates, scores, y

    if state.kind == "temporal":
        samples = _temporal_samples(bundle, settings, side, inputs)
        if not samples:
            raise DataError(f"temporal: no labeled {side} sequences on the stride grid")
        dates = [s[2] for s in samples]
        y = np.array([s[1] for s in samples])
        gcn_p, gru_p = _split_param_groups(state.params)
        scores = np.array([temporal_forward(pairs, gcn_p, gru_p)[0] for pairs, _, _ in samples])
        return dates, scores, y

    raise DataError(f"unknown model kind {state.kind!r}")
