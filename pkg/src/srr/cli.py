"""Command-line pipeline: ingest -> features -> graphs -> train -> evaluate -> report.

Each stage reads the previous stage's artifacts from the output directory,
writes its own, and records a stage manifest (config hash, seed, input and
output content hashes). A stage refuses to run on missing or stale upstream
artifacts and says which stage to rerun. Identical config + seed produce
byte-identical artifacts; nothing written here embeds a timestamp.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from .config import Config, PRESETS, config_hash, load_config
from .errors import ConfigError, DataError, NumericalError, SrrError
from .evaluation import (compute_metrics, crash_windows, lead_times, pr_points,
                         report_to_json, roc_points, summary_table)
from .features import (Standardization, apply_standardization, attach_labels,
                       compute_features, read_features_csv, read_graph_labels_csv,
                       standardize, write_features_csv, write_graph_labels_csv)
from .graphs import build_snapshots, read_snapshots_jsonl, write_snapshots_jsonl
from .market_data import (IngestConfig, ingest_csv, log_returns, read_macro_csv,
                          read_universe_csv, write_panel_csv)
from .models.baselines import day_feature_names
from .models.state import deserialize, parameter_count, serialize
from .plots import grouped_bar_chart, hbar_chart, line_chart
from .training import (DataBundle, SplitPlan, TrainSettings, chronological_split,
                       predict_scores, train)

__all__ = ["main"]

STAGES = ("ingest", "features", "graphs", "train", "evaluate", "report")


# -- small file helpers -------------------------------------------------------

def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _read_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc}") from None


class Run:
    """One configured pipeline run rooted at the output directory."""

    def __init__(self, cfg: Config):
        self.cfg = cfg
        self.hash = config_hash(cfg)
        os.makedirs(cfg.out, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.cfg.out, name)

    def provenance(self) -> str:
        return f"config_hash={self.hash} seed={self.cfg.seed}"

    def write_manifest(self, stage: str, inputs: dict[str, str],
                       outputs: list[str]) -> None:
        _write_json(self.path(f"manifest_{stage}.json"), {
            "stage": stage,
            "config_hash": self.hash,
            "seed": self.cfg.seed,
            "inputs": inputs,
            "outputs": {name: _sha256_file(self.path(name)) for name in outputs},
        })

    def require(self, stage: str, upstream: str, files: list[str]) -> None:
        """Fail loudly if an upstream artifact is missing, edited, or stale."""
        for name in files:
            if not os.path.exists(self.path(name)):
                raise DataError(
                    f"missing artifact {name} (needed by '{stage}'); rerun `srr {upstream}`")
        man_path = self.path(f"manifest_{upstream}.json")
        if not os.path.exists(man_path):
            raise DataError(
                f"no stage manifest for '{upstream}'; rerun `srr {upstream}`")
        man = _read_json(man_path)
        if man.get("config_hash") != self.hash or man.get("seed") != self.cfg.seed:
            raise DataError(
                f"artifacts from stage '{upstream}' are stale "
                f"(config or seed changed); rerun `srr {upstream}`")
        for name in files:
            recorded = man.get("outputs", {}).get(name)
            if recorded is not None and _sha256_file(self.path(name)) != recorded:
                raise DataError(
                    f"artifact {name} no longer matches the '{upstream}' manifest; "
                    f"rerun `srr {upstream}`")


def _settings(cfg: Config) -> TrainSettings:
    m = cfg.model
    layers = ("correlation", "sector") if cfg.graph.sector_layer else ("correlation",)
    return TrainSettings(
        gcn_hidden=m.gcn_hidden, mlp_hidden=m.mlp_hidden, gru_hidden=m.gru_hidden,
        k=m.sequence_length, stride=m.stride, epochs=m.epochs, batch_size=m.batch_size,
        lr=m.learning_rate, loss=m.loss, focal_gamma=m.focal_gamma,
        weighted_adjacency=cfg.graph.weighted_adjacency, layers=layers,
        logistic_lr=m.logistic_lr, logistic_epochs=m.logistic_epochs,
        logistic_tol=m.logistic_tol, forest_trees=m.forest_trees,
        forest_max_depth=m.forest_max_depth, forest_min_leaf=m.forest_min_leaf,
    )


def _period_name(cfg: Config) -> str:
    if cfg.period.preset is not None:
        return cfg.period.preset
    start, end = cfg.period.start, cfg.period.end
    if start or end:
        return f"{start or '...'}..{end or '...'}"
    return "full"


# -- stage: ingest ------------------------------------------------------------

def cmd_ingest(run: Run) -> None:
    cfg = run.cfg
    if cfg.data.prices_csv is None:
        raise ConfigError("data.prices_csv is required for `srr ingest`")
    universe = None
    if cfg.data.universe_csv is not None:
        universe = read_universe_csv(cfg.data.universe_csv)
    tickers = list(cfg.data.tickers) if cfg.data.tickers else (
        list(universe) if universe else None)
    start, end = cfg.period.resolve()
    panel, provenance = ingest_csv(
        cfg.data.prices_csv,
        IngestConfig(tickers=tickers, start=start, end=end, universe=universe))
    write_panel_csv(panel, run.path("prices.csv"))
    _write_json(run.path("provenance.json"), provenance)
    _write_json(run.path("universe.json"), panel.universe_meta or {})

    inputs = {cfg.data.prices_csv: _sha256_file(cfg.data.prices_csv)}
    if cfg.data.universe_csv is not None:
        inputs[cfg.data.universe_csv] = _sha256_file(cfg.data.universe_csv)
    run.write_manifest("ingest", inputs,
                       ["prices.csv", "provenance.json", "universe.json"])
    print(f"ingest: {len(panel.tickers)} tickers x {len(panel.dates)} dates -> "
          f"{run.path('prices.csv')}")


# -- stage: features ----------------------------------------------------------

def _attach_macro(run: Run, fpanel) -> str | None:
    """Align the optional day-level overlay onto the feature dates."""
    macro_csv = run.cfg.data.macro_csv
    if macro_csv is None:
        return None
    dates, names, values = read_macro_csv(macro_csv)
    have = {d: i for i, d in enumerate(dates)}
    missing = [d for d in fpanel.dates if d not in have]
    if missing:
        raise DataError(
            f"macro file {macro_csv} lacks {len(missing)} feature dates "
            f"(first: {missing[0]})")
    fpanel.macro = values[[have[d] for d in fpanel.dates], :]
    fpanel.macro_names = names
    return macro_csv


def _write_macro_csv(run: Run, fpanel) -> None:
    with open(run.path("macro.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write("date," + ",".join(fpanel.macro_names) + "\n")
        for t, day in enumerate(fpanel.dates):
            vals = ",".join(repr(float(v)) for v in fpanel.macro[t])
            fh.write(f"{day},{vals}\n")


def cmd_features(run: Run) -> None:
    cfg = run.cfg
    run.require("features", "ingest", ["prices.csv"])
    panel, _ = ingest_csv(run.path("prices.csv"))
    returns = log_returns(panel)
    fpanel = compute_features(returns, panel,
                              vol_windows=cfg.features.vol_windows,
                              dd_windows=cfg.features.dd_windows,
                              mom_windows=cfg.features.momentum_windows)
    attach_labels(fpanel, panel, threshold=cfg.labels.threshold,
                  horizon=cfg.labels.horizon)
    macro_src = _attach_macro(run, fpanel)

    split = chronological_split(fpanel.dates, ratio=cfg.split.ratio,
                                horizon=cfg.labels.horizon)
    if cfg.features.standardize:
        stats = standardize(
            fpanel, (split.train_dates[0], split.train_dates[-1])).standardization
    else:
        n_f = len(fpanel.names)
        stats = Standardization(mean=np.zeros(n_f), std=np.ones(n_f),
                                train_start=split.train_dates[0],
                                train_end=split.train_dates[-1])

    write_features_csv(fpanel, run.path("features.csv"))
    write_graph_labels_csv(fpanel, run.path("graph_labels.csv"))
    _write_json(run.path("standardization.json"), stats.to_dict())
    _write_json(run.path("split.json"), {
        "ratio": cfg.split.ratio,
        "horizon": cfg.labels.horizon,
        "train_dates": split.train_dates,
        "test_dates": split.test_dates,
    })
    outputs = ["features.csv", "graph_labels.csv", "standardization.json", "split.json"]
    if macro_src is not None:
        _write_macro_csv(run, fpanel)
        outputs.append("macro.csv")

    inputs = {"prices.csv": _sha256_file(run.path("prices.csv"))}
    if macro_src is not None:
        inputs[macro_src] = _sha256_file(macro_src)
    run.write_manifest("features", inputs, outputs)
    print(f"features: {len(fpanel.dates)} dates x {len(fpanel.names)} features, "
          f"{len(split.train_dates)} train / {len(split.test_dates)} test days")


# -- stage: graphs --------------------------------------------------------------

def _load_raw_panel(run: Run):
    """Rebuild the labeled raw feature panel from the features-stage artifacts."""
    fpanel = read_features_csv(run.path("features.csv"))
    dates, labels, valid = read_graph_labels_csv(run.path("graph_labels.csv"))
    if dates != fpanel.dates:
        raise DataError("graph_labels.csv and features.csv disagree on dates; "
                        "rerun `srr features`")
    fpanel.graph_labels = labels
    fpanel.label_valid = valid
    if os.path.exists(run.path("macro.csv")):
        m_dates, m_names, m_values = read_macro_csv(run.path("macro.csv"))
        if m_dates != fpanel.dates:
            raise DataError("macro.csv and features.csv disagree on dates; "
                            "rerun `srr features`")
        fpanel.macro = m_values
        fpanel.macro_names = m_names
    return fpanel


def cmd_graphs(run: Run) -> None:
    cfg = run.cfg
    run.require("graphs", "ingest", ["prices.csv"])
    needed = ["features.csv", "graph_labels.csv", "standardization.json"]
    if cfg.data.macro_csv is not None:
        needed.append("macro.csv")
    run.require("graphs", "features", needed)

    panel, _ = ingest_csv(run.path("prices.csv"))
    returns = log_returns(panel)
    fpanel = _load_raw_panel(run)
    if fpanel.tickers != panel.tickers:
        raise DataError("features.csv and prices.csv disagree on tickers; "
                        "rerun `srr features`")
    stats = Standardization.from_dict(_read_json(run.path("standardization.json")))
    std_panel = apply_standardization(fpanel, stats)

    sector_map = None
    if cfg.graph.sector_layer:
        sector_map = _read_json(run.path("universe.json"))
        if not sector_map:
            raise DataError("graph.sector_layer is on but the ingested universe "
                            "carries no sector labels")
    snapshots = build_snapshots(returns, std_panel, window=cfg.graph.window,
                                tau=cfg.graph.tau, sector_map=sector_map)
    write_snapshots_jsonl(snapshots, run.path("graphs.jsonl"), meta={
        "config_hash": run.hash,
        "seed": cfg.seed,
        "window": cfg.graph.window,
        "tau": cfg.graph.tau,
        "layers": ["correlation", "sector"] if cfg.graph.sector_layer else ["correlation"],
    })
    n_edges = sum(len(s.layers["correlation"]) for s in snapshots)
    run.write_manifest("graphs", {name: _sha256_file(run.path(name))
                                  for name in ["prices.csv"] + needed},
                       ["graphs.jsonl"])
    print(f"graphs: {len(snapshots)} snapshots, {n_edges} correlation edges total")


# -- stages: train / evaluate ----------------------------------------------------

_BUNDLE_FILES = ["features.csv", "graph_labels.csv", "standardization.json", "split.json"]


def _load_bundle(run: Run) -> DataBundle:
    fpanel = _load_raw_panel(run)
    stats = Standardization.from_dict(_read_json(run.path("standardization.json")))
    std_panel = apply_standardization(fpanel, stats)
    split_raw = _read_json(run.path("split.json"))
    split = SplitPlan(train_dates=list(split_raw["train_dates"]),
                      test_dates=list(split_raw["test_dates"]),
                      ratio=float(split_raw["ratio"]),
                      horizon=int(split_raw["horizon"]))
    snapshots, _ = read_snapshots_jsonl(run.path("graphs.jsonl"))
    return DataBundle(panel=std_panel, snapshots=snapshots, split=split,
                      macro_names=list(std_panel.macro_names))


def cmd_train(run: Run) -> None:
    cfg = run.cfg
    run.require("train", "features", _BUNDLE_FILES)
    run.require("train", "graphs", ["graphs.jsonl"])
    bundle = _load_bundle(run)
    settings = _settings(cfg)
    outputs = []
    for kind in cfg.model.kinds:
        state, log = train(kind, bundle, settings, cfg.seed)
        state.config_hash = run.hash
        with open(run.path(f"model_{kind}.srrm"), "wb") as fh:
            fh.write(serialize(state))
        log["parameter_count"] = parameter_count(state)
        log["config_hash"] = run.hash
        log["seed"] = cfg.seed
        _write_json(run.path(f"training_log_{kind}.json"), log)
        outputs += [f"model_{kind}.srrm", f"training_log_{kind}.json"]
        print(f"train[{kind}]: {log.get('samples', 0)} samples, "
              f"{log['parameter_count']} parameters")
    inputs = {name: _sha256_file(run.path(name))
              for name in _BUNDLE_FILES + ["graphs.jsonl"]}
    run.write_manifest("train", inputs, outputs)


def cmd_evaluate(run: Run) -> None:
    cfg = run.cfg
    run.require("evaluate", "features", _BUNDLE_FILES)
    run.require("evaluate", "graphs", ["graphs.jsonl"])
    model_files = [f"model_{kind}.srrm" for kind in cfg.model.kinds]
    run.require("evaluate", "train", model_files)

    bundle = _load_bundle(run)
    settings = _settings(cfg)
    valid = bundle.panel.label_valid
    calendar = [d for t, d in enumerate(bundle.panel.dates) if valid[t]]
    daily_labels = bundle.panel.graph_labels[valid]

    models_report = {}
    outputs = []
    for kind in cfg.model.kinds:
        with open(run.path(f"model_{kind}.srrm"), "rb") as fh:
            state = deserialize(fh.read())
        dates, scores, labels = predict_scores(state, bundle, settings, side="test")
        metrics = compute_metrics(scores, labels, threshold=cfg.evaluate.threshold)
        leads = lead_times(calendar, daily_labels, dates, scores,
                           gamma=cfg.evaluate.warn_gamma)
        timeline = f"timeline_{kind}.csv"
        with open(run.path(timeline), "w", encoding="utf-8", newline="") as fh:
            fh.write("date,score,label\n")
            for d, s, y in zip(dates, scores, labels):
                fh.write(f"{d},{float(s)!r},{int(y)}\n")
        outputs.append(timeline)
        entry = {
            "parameter_count": parameter_count(state),
            "metrics": metrics,
            "lead_times": leads,
        }
        if kind == "forest":
            names = day_feature_names(bundle.panel)
            imp = state.params["feature_importance"].reshape(-1)
            entry["feature_importance"] = {
                n: float(v) for n, v in zip(names, imp)}
        models_report[kind] = entry
        auroc = metrics["auroc"]
        shown = "--" if auroc is None else f"{auroc:.3f}"
        print(f"evaluate[{kind}]: n={metrics['n']} auroc={shown}")

    cfg_echo = cfg.to_dict()
    cfg_echo.pop("out", None)
    report = {
        "config": cfg_echo,
        "config_hash": run.hash,
        "seed": cfg.seed,
        "period": _period_name(cfg),
        "threshold": cfg.evaluate.threshold,
        "warn_gamma": cfg.evaluate.warn_gamma,
        "split": {"train_days": len(bundle.split.train_dates),
                  "test_days": len(bundle.split.test_dates)},
        "models": models_report,
    }
    with open(run.path("report.json"), "w", encoding="utf-8", newline="") as fh:
        fh.write(report_to_json(report))
    outputs.append("report.json")
    inputs = {name: _sha256_file(run.path(name))
              for name in _BUNDLE_FILES + ["graphs.jsonl"] + model_files}
    run.write_manifest("evaluate", inputs, outputs)


# -- stage: report ----------------------------------------------------------------

def _read_timeline(path: str) -> tuple[list[str], np.ndarray, np.ndarray]:
    import csv as _csv

    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader)
        if header != ["date", "score", "label"]:
            raise DataError(f"{path}: unexpected timeline header {header!r}")
        dates, scores, labels = [], [], []
        for row in reader:
            dates.append(row[0])
            scores.append(float(row[1]))
            labels.append(int(row[2]))
    return dates, np.asarray(scores), np.asarray(labels)


def _aggregate_importance(importance: dict[str, float]) -> tuple[list[str], list[float]]:
    """Fold the per-day mean_x/std_x columns back onto the base feature names."""
    totals: dict[str, float] = {}
    for name, value in importance.items():
        if name.startswith("mean_"):
            base = name[5:]
        elif name.startswith("std_"):
            base = name[4:]
        else:
            base = name
        totals[base] = totals.get(base, 0.0) + value
    ordered = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    return [k for k, _ in ordered], [v for _, v in ordered]


def cmd_report(run: Run) -> None:
    cfg = run.cfg
    run.require("report", "evaluate", ["report.json"]
                + [f"timeline_{kind}.csv" for kind in cfg.model.kinds])
    report = _read_json(run.path("report.json"))
    kinds = sorted(report["models"])
    timelines = {kind: _read_timeline(run.path(f"timeline_{kind}.csv"))
                 for kind in kinds}
    prov = run.provenance()

    summary = summary_table(report)
    outputs = ["summary.txt"]

    two_class = [k for k in kinds
                 if report["models"][k]["metrics"].get("auroc") is not None]
    if two_class:
        line_chart(run.path("roc.svg"), "ROC curves (test)",
                   [(k, [p[0] for p in roc_points(timelines[k][1], timelines[k][2])],
                     [p[1] for p in roc_points(timelines[k][1], timelines[k][2])])
                    for k in two_class],
                   "false positive rate", "true positive rate",
                   xlim=(0.0, 1.0), ylim=(0.0, 1.0), diagonal=True, provenance=prov)
        line_chart(run.path("pr.svg"), "Precision-recall curves (test)",
                   [(k, [p[0] for p in pr_points(timelines[k][1], timelines[k][2])],
                     [p[1] for p in pr_points(timelines[k][1], timelines[k][2])])
                    for k in two_class],
                   "recall", "precision", xlim=(0.0, 1.0), ylim=(0.0, 1.05),
                   provenance=prov)
        outputs += ["roc.svg", "pr.svg"]
    else:
        summary += ("\nnote: ROC and PR plots omitted -- every model's test"
                    " labels are single-class\n")

    with open(run.path("summary.txt"), "w", encoding="utf-8", newline="") as fh:
        fh.write(summary)

    # Risk timeline over the union of every model's scored test dates.
    union_dates = sorted({d for dates, _, _ in timelines.values() for d in dates})
    pos = {d: i for i, d in enumerate(union_dates)}
    union_labels = np.zeros(len(union_dates), dtype=np.int8)
    for dates, _, labels in timelines.values():
        for d, y in zip(dates, labels):
            union_labels[pos[d]] = y
    shaded = [(float(a), float(b) + 1.0) for a, b in crash_windows(union_labels)]
    series = [(k, [float(pos[d]) for d in timelines[k][0]],
               [float(v) for v in timelines[k][1]]) for k in kinds]
    n_ticks = min(6, len(union_dates))
    tick_idx = [round(i * (len(union_dates) - 1) / max(n_ticks - 1, 1))
                for i in range(n_ticks)]
    x_ticks = [(float(i), union_dates[i][:7]) for i in sorted(set(tick_idx))]
    line_chart(run.path("risk_timeline.svg"), "Warning scores over the test window",
               series, "date", "score", xlim=(0.0, float(max(len(union_dates) - 1, 1))),
               ylim=(0.0, 1.0), x_tick_labels=x_ticks, shaded=shaded, provenance=prov)
    outputs.append("risk_timeline.svg")

    # Lead-time histogram, 5-trading-day bins.
    leads = {k: report["models"][k].get("lead_times", {}).get("lead_times", [])
             for k in kinds}
    max_lead = max((max(v) for v in leads.values() if v), default=0)
    n_bins = max_lead // 5 + 1
    categories = [f"{5 * b}-{5 * b + 4}" for b in range(n_bins)]
    bar_series = []
    for k in kinds:
        counts = [0.0] * n_bins
        for lead in leads[k]:
            counts[lead // 5] += 1.0
        bar_series.append((k, counts))
    grouped_bar_chart(run.path("lead_times.svg"), "Warning lead times (test)",
                      categories, bar_series, "lead time (trading days)",
                      "warnings", provenance=prov)
    outputs.append("lead_times.svg")

    importance = report["models"].get("forest", {}).get("feature_importance")
    if importance:
        names, values = _aggregate_importance(importance)
        hbar_chart(run.path("feature_importance.svg"),
                   "Random-forest feature importance",
                   names, values, "mean impurity decrease", provenance=prov)
        outputs.append("feature_importance.svg")

    inputs = {"report.json": _sha256_file(run.path("report.json"))}
    for kind in kinds:
        name = f"timeline_{kind}.csv"
        inputs[name] = _sha256_file(run.path(name))
    run.write_manifest("report", inputs, outputs)
    print(f"report: {', '.join(outputs)} -> {cfg.out}")


def cmd_run_all(run: Run) -> None:
    cmd_ingest(run)
    cmd_features(run)
    cmd_graphs(run)
    cmd_train(run)
    cmd_evaluate(run)
    cmd_report(run)


# -- entry point --------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map usage errors to 1
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="srr",
                     description="Market-graph crash early-warning pipeline")
    sub = parser.add_subparsers(dest="command")
    for name in STAGES + ("run-all",):
        p = sub.add_parser(name, help=f"run the {name} stage")
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--preset", default=None, choices=sorted(PRESETS),
                       help="named crisis date range")
        p.add_argument("--out", default=None, help="output directory")
    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "features": cmd_features,
    "graphs": cmd_graphs,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
    "run-all": cmd_run_all,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise ConfigError("missing subcommand (try `srr run-all --config cfg.json`)")
        cfg = load_config(args.config, seed=args.seed, preset=args.preset, out=args.out)
        _COMMANDS[args.command](Run(cfg))
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SrrError as exc:  # pragma: no cover - future subclasses
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
