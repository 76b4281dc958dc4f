"""Early-warning evaluation: confusion metrics, AUROC/AUPRC, lead times.

Predicted positive means score strictly above the decision threshold.
Metrics whose denominator is empty (single-class data) are reported as
absent (None), never as NaN or a silent zero.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import DataError, ShapeError
from .graphs import average_ranks

__all__ = [
    "compute_metrics",
    "auroc_rank",
    "auroc_oracle",
    "auprc_step",
    "roc_points",
    "pr_points",
    "crash_windows",
    "lead_times",
    "report_to_json",
    "summary_table",
]


def _check_scored(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if s.shape != y.shape:
        raise ShapeError(f"scores {s.shape} vs labels {y.shape}")
    if s.size == 0:
        raise DataError("cannot evaluate an empty score set")
    if not np.all(np.isfinite(s)):
        raise DataError("scores contain non-finite values")
    if not np.all((y == 0) | (y == 1)):
        raise DataError("labels must be 0 or 1")
    return s, y.astype(np.int8)


def auroc_rank(scores, labels) -> float | None:
    """AUROC via the rank statistic (ties share average ranks).

    Equals the probability a random positive outscores a random negative,
    ties counted half. None when only one class is present.
    """
    s, y = _check_scored(scores, labels)
    n_pos = int(np.count_nonzero(y))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = average_ranks(s)
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / float(n_pos * n_neg)


def auroc_oracle(scores, labels) -> float | None:
    """Brute-force pair counting: concordant + half-ties over all pos/neg pairs."""
    s, y = _check_scored(scores, labels)
    pos = s[y == 1]
    neg = s[y == 0]
    if pos.size == 0 or neg.size == 0:
        return None
    num = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                num += 1.0
            elif p == q:
                num += 0.5
    return num / float(pos.size * neg.size)


def auprc_step(scores, labels) -> float | None:
    """Average precision by step integration of the precision-recall curve.

    Thresholds sweep the distinct score values in descending order; tied
    scores enter as one block. None when no positives exist.
    """
    s, y = _check_scored(scores, labels)
    n_pos = int(np.count_nonzero(y))
    if n_pos == 0:
        return None
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    ap = 0.0
    tp = fp = 0
    recall_prev = 0.0
    i = 0
    n = s.size
    while i < n:
        j = i
        while j + 1 < n and s_sorted[j + 1] == s_sorted[i]:
            j += 1
        block = y_sorted[i:j + 1]
        tp += int(np.count_nonzero(block))
        fp += int(block.size - np.count_nonzero(block))
        recall = tp / n_pos
        precision = tp / (tp + fp)
        ap += (recall - recall_prev) * precision
        recall_prev = recall
        i = j + 1
    return ap


def roc_points(scores, labels) -> list[tuple[float, float]]:
    """(FPR, TPR) step points from (0,0) to (1,1), tied scores as one step."""
    s, y = _check_scored(scores, labels)
    n_pos = int(np.count_nonzero(y))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC undefined for single-class labels")
    order = np.argsort(-s, kind="stable")
    y_sorted = y[order]
    s_sorted = s[order]
    pts = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < y.size:
        j = i
        while j + 1 < y.size and s_sorted[j + 1] == s_sorted[i]:
            j += 1
        block = y_sorted[i:j + 1]
        tp += int(np.count_nonzero(block))
        fp += int(block.size - np.count_nonzero(block))
        pts.append((fp / n_neg, tp / n_pos))
        i = j + 1
    return pts


def pr_points(scores, labels) -> list[tuple[float, float]]:
    """(recall, precision) step points; starts at recall 0 with the first block's precision."""
    s, y = _check_scored(scores, labels)
    n_pos = int(np.count_nonzero(y))
    if n_pos == 0:
        raise DataError("PR curve undefined without positives")
    order = np.argsort(-s, kind="stable")
    y_sorted = y[order]
    s_sorted = s[order]
    pts = []
    tp = fp = 0
    i = 0
    while i < y.size:
        j = i
        while j + 1 < y.size and s_sorted[j + 1] == s_sorted[i]:
            j += 1
        block = y_sorted[i:j + 1]
        tp += int(np.count_nonzero(block))
        fp += int(block.size - np.count_nonzero(block))
        pts.append((tp / n_pos, tp / (tp + fp)))
        i = j + 1
    return [(0.0, pts[0][1])] + pts


def compute_metrics(scores, labels, threshold: float = 0.5) -> dict:
    """Confusion counts at the threshold plus ranking metrics.

    Keys: tp/fp/tn/fn, accuracy, and (None when undefined) precision,
    recall, fpr, fnr, auroc, auprc.
    """
    s, y = _check_scored(scores, labels)
    pred = s > threshold
    tp = int(np.count_nonzero(pred & (y == 1)))
    fp = int(np.count_nonzero(pred & (y == 0)))
    tn = int(np.count_nonzero(~pred & (y == 0)))
    fn = int(np.count_nonzero(~pred & (y == 1)))

    def ratio(num: int, den: int) -> float | None:
        return num / den if den > 0 else None

    return {
        "threshold": float(threshold),
        "n": int(s.size),
        "tp": tp, "fp": fp, "tn": tn, "fn": fn,
        "accuracy": (tp + tn) / s.size,
        "precision": ratio(tp, tp + fp),
        "recall": ratio(tp, tp + fn),
        "fpr": ratio(fp, fp + tn),
        "fnr": ratio(fn, fn + tp),
        "auroc": auroc_rank(s, y),
        "auprc": auprc_step(s, y),
    }


# -- lead times ---------------------------------------------------------------

def crash_windows(labels: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of label 1 as (onset index, last index) pairs."""
    y = np.asarray(labels).reshape(-1)
    windows = []
    start = None
    for i, v in enumerate(y):
        if v == 1 and start is None:
            start = i
        elif v != 1 and start is not None:
            windows.append((start, i - 1))
            start = None
    if start is not None:
        windows.append((start, len(y) - 1))
    return windows


def lead_times(calendar_dates: list[str], daily_labels, scored_dates: list[str],
               scores, gamma: float = 0.5) -> dict:
    """Warning lead times in trading days.

    A warning is a scored date with score > gamma. Each warning that
    precedes the next crash-window onset with no crash day in between
    (the onset day itself counts, lead 0) contributes onset - warning in
    trading-day positions on the calendar. Warnings with no later onset
    are unmatched; warnings inside an ongoing crash window are tallied
    separately as in_crisis.
    """
    y = np.asarray(daily_labels).reshape(-1)
    if len(calendar_dates) != y.size:
        raise ShapeError(f"calendar has {len(calendar_dates)} dates, labels {y.size}")
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    if len(scored_dates) != s.size:
        raise ShapeError(f"{len(scored_dates)} scored dates vs {s.size} scores")
    pos_of = {d: i for i, d in enumerate(calendar_dates)}
    onsets = [w[0] for w in crash_windows(y)]
    leads: list[int] = []
    unmatched = 0
    in_crisis = 0
    for date, score in zip(scored_dates, s):
        if score <= gamma:
            continue
        if date not in pos_of:
            raise DataError(f"scored date {date} is not on the evaluation calendar")
        w = pos_of[date]
        nxt = next((o for o in onsets if o >= w), None)
        if y[w] == 1 and w not in onsets:
            in_crisis += 1  # fired mid-crash; predicts nothing upcoming
        elif nxt is None:
            unmatched += 1
        else:
            leads.append(nxt - w)
    return {
        "lead_times": leads,
        "unmatched": unmatched,
        "in_crisis": in_crisis,
        "n_onsets": len(onsets),
        "gamma": float(gamma),
    }


# -- report rendering -----------------------------------------------------------

def _drop_none(obj):
    if isinstance(obj, dict):
        return {k: _drop_none(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, list):
        return [_drop_none(v) for v in obj]
    return obj


def report_to_json(report: dict) -> str:
    """Canonical serialization: sorted keys, absent metrics omitted."""
    return json.dumps(_drop_none(report), sort_keys=True, indent=2) + "\n"


def _fmt(value, width: int = 9) -> str:
    if value is None:
        return "--".rjust(width)
    return f"{value:.3f}".rjust(width)


def summary_table(report: dict) -> str:
    """Aligned text table: one row per model, dashes where a metric is undefined."""
    period = report.get("period", "full")
    lines = [
        f"period: {period}    seed: {report.get('seed')}    "
        f"threshold: {report.get('threshold')}",
        "",
        f"{'model':<10}{'params':>8}{'n':>6}{'auroc':>9}{'auprc':>9}"
        f"{'precision':>11}{'recall':>9}{'accuracy':>10}{'fpr':>9}{'fnr':>9}",
    ]
    for kind in sorted(report["models"]):
        m = report["models"][kind]["metrics"]
        lines.append(
            f"{kind:<10}{report['models'][kind].get('parameter_count', 0):>8}"
            f"{m['n']:>6}{_fmt(m.get('auroc'))}{_fmt(m.get('auprc'))}"
            f"{_fmt(m.get('precision'), 11)}{_fmt(m.get('recall'))}"
            f"{_fmt(m.get('accuracy'), 10)}{_fmt(m.get('fpr'))}{_fmt(m.get('fnr'))}"
        )
        counts = (f"  tp={m['tp']} fp={m['fp']} tn={m['tn']} fn={m['fn']}")
        lt = report["models"][kind].get("lead_times")
        if lt is not None:
            med = (f"median_lead={_median(lt['lead_times'])}" if lt["lead_times"]
                   else "median_lead=--")
            counts += (f"  warnings: {len(lt['lead_times'])} matched, {lt['unmatched']}"
                       f" unmatched, {lt['in_crisis']} in-crisis  {med}")
        lines.append(counts)
    single = [k for k in sorted(report["models"])
              if report["models"][k]["metrics"].get("auroc") is None]
    if single:
        lines.append("")
        lines.append(
            "note: AUROC/ROC omitted for "
            + ", ".join(single)
            + " (single-class test labels make them undefined)"
        )
    return "\n".join(lines) + "\n"


def _median(values: list) -> str:
    if not values:
        return "--"
    v = sorted(values)
    mid = len(v) // 2
    med = v[mid] if len(v) % 2 == 1 else 0.5 * (v[mid - 1] + v[mid])
    return f"{med:g}"
