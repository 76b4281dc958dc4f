"""Node features, crash-regime labels, and train-range standardization.

Per ticker and date the feature vector is, in order:

    ret_1d   daily log return
    vol_W    sample std (ddof=1) of the last W log returns, per vol window
    dd_W     p[t] / max(p[t-W+1..t]) - 1, per drawdown window
    mom_W    p[t] / p[t-W] - 1, per momentum window

Defaults give the 7-vector [ret_1d, vol_20, vol_60, dd_20, dd_60, mom_10,
mom_30]. Every value at date t uses prices up to and including t only; the
warm-up prefix (first max-window days, 60 by default) carries no features.

Labels look forward: a node is positive at t when its price falls at least
``threshold`` below p[t] within the next ``horizon`` trading days; the graph
label applies the same rule to the equal-weight portfolio of all tickers
(prices normalized to 1 at t). The final ``horizon`` dates carry no label.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DataError, ShapeError
from .market_data import PricePanel, ReturnPanel

__all__ = [
    "FeaturePanel",
    "Standardization",
    "feature_names",
    "compute_features",
    "compute_labels",
    "attach_labels",
    "standardize",
    "apply_standardization",
    "write_features_csv",
    "read_features_csv",
    "write_graph_labels_csv",
    "read_graph_labels_csv",
]

DEFAULT_VOL_WINDOWS = (20, 60)
DEFAULT_DD_WINDOWS = (20, 60)
DEFAULT_MOM_WINDOWS = (10, 30)


def feature_names(vol_windows=DEFAULT_VOL_WINDOWS, dd_windows=DEFAULT_DD_WINDOWS,
                  mom_windows=DEFAULT_MOM_WINDOWS) -> list[str]:
    return (["ret_1d"]
            + [f"vol_{w}" for w in vol_windows]
            + [f"dd_{w}" for w in dd_windows]
            + [f"mom_{w}" for w in mom_windows])


@dataclass
class Standardization:
    """Per-feature z-score statistics fitted on a training date range."""

    mean: np.ndarray  # length F
    std: np.ndarray  # length F, zero-variance entries replaced by 1.0
    train_start: str
    train_end: str
    degenerate: list[str] = field(default_factory=list)  # features whose std was 0

    def to_dict(self) -> dict:
        return {
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
            "train_start": self.train_start,
            "train_end": self.train_end,
            "degenerate": list(self.degenerate),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Standardization":
        return cls(
            mean=np.asarray(d["mean"], dtype=np.float64),
            std=np.asarray(d["std"], dtype=np.float64),
            train_start=d["train_start"],
            train_end=d["train_end"],
            degenerate=list(d.get("degenerate", [])),
        )


@dataclass
class FeaturePanel:
    """Feature cube plus (optionally) labels over the feature-valid dates."""

    tickers: list[str]
    dates: list[str]  # feature-valid dates (warm-up excluded)
    features: np.ndarray  # N x T_f x F
    names: list[str]
    macro: np.ndarray | None = None  # T_f x M day-level overlay, appended to every node
    macro_names: list[str] = field(default_factory=list)
    node_labels: np.ndarray | None = None  # N x T_f int8; meaningful where label_valid
    graph_labels: np.ndarray | None = None  # T_f int8
    label_valid: np.ndarray | None = None  # T_f bool; False on the last `horizon` dates
    standardization: Standardization | None = None

    @property
    def n_features(self) -> int:
        return self.features.shape[2]

    def node_matrix(self, t: int) -> np.ndarray:
        """N x (F + M) model-input matrix at date index t (macro broadcast to rows)."""
        x = self.features[:, t, :]
        if self.macro is not None:
            x = np.hstack([x, np.repeat(self.macro[t][None, :], x.shape[0], axis=0)])
        return x


def _rolling_std(returns: np.ndarray, window: int) -> np.ndarray:
    # returns: N x (T-1); output column j is the std of the window ending at
    # return index j + window - 1. Each window reduces independently, so
    # truncating the panel after t never changes values at or before t.
    win = sliding_window_view(returns, window, axis=1)
    return win.std(axis=2, ddof=1)


def compute_features(returns: ReturnPanel, prices: PricePanel,
                     vol_windows=DEFAULT_VOL_WINDOWS,
                     dd_windows=DEFAULT_DD_WINDOWS,
                     mom_windows=DEFAULT_MOM_WINDOWS) -> FeaturePanel:
    """Build the feature cube over the feature-valid dates of the panel."""
    if returns.tickers != prices.tickers:
        raise DataError("returns and prices cover different tickers")
    p = prices.prices
    n, t_total = p.shape
    warmup = max(max(vol_windows), max(dd_windows) - 1, max(mom_windows), 1)
    if t_total <= warmup:
        raise DataError(f"need more than {warmup} price dates for features, have {t_total}")

    dates = list(prices.dates[warmup:])
    t_f = len(dates)
    names = feature_names(vol_windows, dd_windows, mom_windows)
    feats = np.empty((n, t_f, len(names)), dtype=np.float64)

    # ret_1d at price index t is the return into t; return column index t-1.
    feats[:, :, 0] = returns.returns[:, warmup - 1:]
    col = 1
    for w in vol_windows:
        # window of w returns ending at price index t -> return cols t-w..t-1
        stds = _rolling_std(returns.returns, w)  # cols end at return index w-1..T-2
        feats[:, :, col] = stds[:, warmup - w:]
        col += 1
    for w in dd_windows:
        highs = sliding_window_view(p, w, axis=1).max(axis=2)  # ends at price index w-1..T-1
        feats[:, :, col] = p[:, warmup:] / highs[:, warmup - (w - 1):] - 1.0
        col += 1
    for w in mom_windows:
        feats[:, :, col] = p[:, warmup:] / p[:, warmup - w:t_total - w] - 1.0
        col += 1

    if not np.all(np.isfinite(feats)):
        raise DataError("non-finite feature values")
    return FeaturePanel(tickers=list(prices.tickers), dates=dates, features=feats, names=names)


def compute_labels(prices: PricePanel, threshold: float = 0.10,
                   horizon: int = 60) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Forward-drawdown labels over all panel dates.

    Returns (node_labels N x T, graph_labels T, valid T). Position t is
    positive when min over h in 1..horizon of p[t+h]/p[t] - 1 <= -threshold
    (boundary inclusive). valid[t] is False when fewer than ``horizon``
    future dates exist; labels there are 0 and must be ignored.
    """
    if not (0.0 < threshold < 1.0):
        raise DataError(f"label threshold must be in (0, 1), got {threshold}")
    if horizon < 1:
        raise DataError(f"label horizon must be >= 1, got {horizon}")
    p = prices.prices
    n, t_total = p.shape
    node = np.zeros((n, t_total), dtype=np.int8)
    graph = np.zeros(t_total, dtype=np.int8)
    valid = np.zeros(t_total, dtype=bool)
    if t_total > horizon:
        t_lab = t_total - horizon
        # forward minimum over the next `horizon` values, excluding t itself
        fwd = sliding_window_view(p, horizon, axis=1).min(axis=2)  # window starts at t
        fwd_min = fwd[:, 1:]  # window starting at t+1 covers t+1..t+horizon
        base = p[:, :t_lab]
        node[:, :t_lab] = (fwd_min / base - 1.0 <= -threshold).astype(np.int8)

        # equal-weight portfolio entered at t: value after h days is the mean
        # over tickers of p[t+h]/p[t]; take the worst value over the horizon
        port_min = np.full(t_lab, np.inf)
        for h in range(1, horizon + 1):
            ratio = (p[:, h:h + t_lab] / base).mean(axis=0)
            port_min = np.minimum(port_min, ratio)
        graph[:t_lab] = (port_min - 1.0 <= -threshold).astype(np.int8)
        valid[:t_lab] = True
    return node, graph, valid


def attach_labels(panel: FeaturePanel, prices: PricePanel, threshold: float = 0.10,
                  horizon: int = 60) -> FeaturePanel:
    """Compute labels and align them onto the panel's feature dates."""
    node, graph, valid = compute_labels(prices, threshold, horizon)
    offset = len(prices.dates) - len(panel.dates)
    panel.node_labels = node[:, offset:]
    panel.graph_labels = graph[offset:]
    panel.label_valid = valid[offset:]
    return panel


def standardize(panel: FeaturePanel, train_range: tuple[str, str]) -> FeaturePanel:
    """Z-score features using statistics from the train date range only.

    Returns a new panel; a zero-variance feature gets std 1.0 and a recorded
    warning instead of a division blow-up. The fitted statistics ride along
    in ``standardization`` and apply to every date, train or not.
    """
    start, end = train_range
    idx = [t for t, d in enumerate(panel.dates) if start <= d <= end]
    if not idx:
        raise DataError(f"standardize: no panel dates inside train range {start}..{end}")
    cells = panel.features[:, idx, :]  # N x T_train x F
    mean = cells.mean(axis=(0, 1))
    std = cells.std(axis=(0, 1))  # population std: train cells map to exactly mean 0, std 1
    degenerate = [panel.names[f] for f in range(len(panel.names)) if std[f] == 0.0]
    for name in degenerate:
        warnings.warn(f"feature {name} has zero variance on the train range; std set to 1")
    std = np.where(std == 0.0, 1.0, std)

    stats = Standardization(mean=mean, std=std, train_start=start, train_end=end,
                            degenerate=degenerate)
    return apply_standardization(panel, stats)


def apply_standardization(panel: FeaturePanel, stats: Standardization) -> FeaturePanel:
    """Apply already-fitted z-score statistics to a raw panel (new panel out)."""
    if stats.mean.shape != (len(panel.names),):
        raise ShapeError(
            f"standardization stats cover {stats.mean.shape[0]} features, "
            f"panel has {len(panel.names)}")
    return FeaturePanel(
        tickers=list(panel.tickers),
        dates=list(panel.dates),
        features=(panel.features - stats.mean) / stats.std,
        names=list(panel.names),
        macro=None if panel.macro is None else panel.macro.copy(),
        macro_names=list(panel.macro_names),
        node_labels=None if panel.node_labels is None else panel.node_labels.copy(),
        graph_labels=None if panel.graph_labels is None else panel.graph_labels.copy(),
        label_valid=None if panel.label_valid is None else panel.label_valid.copy(),
        standardization=stats,
    )


# -- serialization ---------------------------------------------------------

def write_features_csv(panel: FeaturePanel, path: str) -> None:
    """Long CSV: date,ticker,<features...>,node_label (blank when unlabeled)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("date,ticker," + ",".join(panel.names) + ",node_label\n")
        for t, day in enumerate(panel.dates):
            labeled = panel.label_valid is not None and bool(panel.label_valid[t])
            for i, ticker in enumerate(panel.tickers):
                vals = ",".join(repr(float(v)) for v in panel.features[i, t, :])
                lab = str(int(panel.node_labels[i, t])) if labeled else ""
                fh.write(f"{day},{ticker},{vals},{lab}\n")


def read_features_csv(path: str) -> FeaturePanel:
    import csv as _csv

    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader)
        if header[:2] != ["date", "ticker"] or header[-1] != "node_label":
            raise DataError(f"{path}: unexpected feature CSV header")
        names = header[2:-1]
        rows = list(reader)
    dates = sorted({r[0] for r in rows})
    tickers = sorted({r[1] for r in rows})
    d_idx = {d: t for t, d in enumerate(dates)}
    t_idx = {k: i for i, k in enumerate(tickers)}
    feats = np.full((len(tickers), len(dates), len(names)), np.nan)
    node = np.zeros((len(tickers), len(dates)), dtype=np.int8)
    valid = np.zeros(len(dates), dtype=bool)
    for r in rows:
        i, t = t_idx[r[1]], d_idx[r[0]]
        feats[i, t, :] = [float(v) for v in r[2:-1]]
        if r[-1] != "":
            node[i, t] = int(r[-1])
            valid[t] = True
    if np.isnan(feats).any():
        raise DataError(f"{path}: missing (date, ticker) cells")
    return FeaturePanel(tickers=tickers, dates=dates, features=feats, names=names,
                        node_labels=node, label_valid=valid)


def write_graph_labels_csv(panel: FeaturePanel, path: str) -> None:
    """Companion CSV: date,graph_label (blank when the date is unlabeled)."""
    if panel.graph_labels is None:
        raise DataError("panel carries no graph labels")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("date,graph_label\n")
        for t, day in enumerate(panel.dates):
            lab = str(int(panel.graph_labels[t])) if panel.label_valid[t] else ""
            fh.write(f"{day},{lab}\n")


def read_graph_labels_csv(path: str) -> tuple[list[str], np.ndarray, np.ndarray]:
    import csv as _csv

    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader)
        if header != ["date", "graph_label"]:
            raise DataError(f"{path}: unexpected graph-label CSV header")
        dates, labels, valid = [], [], []
        for row in reader:
            dates.append(row[0])
            labels.append(int(row[1]) if row[1] != "" else 0)
            valid.append(row[1] != "")
    return dates, np.asarray(labels, dtype=np.int8), np.asarray(valid, dtype=bool)
