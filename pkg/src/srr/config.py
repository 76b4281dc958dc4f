"""Run configuration: nested schema, presets, canonical JSON, and hashing.

The config is a plain dataclass tree.  ``from_dict`` is strict (unknown keys
are errors), ``to_dict`` is canonical (fixed key order via sorted JSON), and
``config_hash`` fingerprints everything except the output directory so that
two runs of the same experiment into different folders share a hash.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields
from typing import Any

from .errors import ConfigError

__all__ = [
    "DataConfig", "PeriodConfig", "FeatureConfig", "LabelConfig", "GraphConfig",
    "ModelConfig", "SplitConfig", "EvaluateConfig", "Config",
    "PRESETS", "MODEL_KINDS", "load_config", "config_hash", "canonical_json",
]

MODEL_KINDS = ("logistic", "forest", "gcn", "temporal")

PRESETS = {
    "dotcom": ("1998-01-01", "2003-12-31"),
    "gfc": ("2006-01-01", "2011-12-31"),
    "covid": ("2018-01-01", "2021-12-31"),
}


def _check_keys(section: str, data: dict, allowed: set[str]) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {', '.join(unknown)}")


def _dataclass_from(section: str, cls, data: Any):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section '{section}' must be a mapping")
    names = {f.name for f in fields(cls)}
    _check_keys(section, data, names)
    kwargs = {}
    for f in fields(cls):
        if f.name in data:
            value = data[f.name]
            if isinstance(value, list):
                value = tuple(value)
            kwargs[f.name] = value
    return cls(**kwargs)


@dataclass(frozen=True)
class DataConfig:
    prices_csv: str | None = None
    universe_csv: str | None = None
    tickers: tuple[str, ...] | None = None
    macro_csv: str | None = None


@dataclass(frozen=True)
class PeriodConfig:
    preset: str | None = None
    start: str | None = None
    end: str | None = None

    def resolve(self) -> tuple[str | None, str | None]:
        if self.preset is not None:
            if self.preset not in PRESETS:
                raise ConfigError(
                    f"unknown period preset '{self.preset}'; "
                    f"expected one of {', '.join(sorted(PRESETS))}")
            return PRESETS[self.preset]
        return self.start, self.end


@dataclass(frozen=True)
class FeatureConfig:
    vol_windows: tuple[int, ...] = (20, 60)
    dd_windows: tuple[int, ...] = (20, 60)
    momentum_windows: tuple[int, ...] = (10, 30)
    standardize: bool = True


@dataclass(frozen=True)
class LabelConfig:
    threshold: float = 0.10
    horizon: int = 60

    def __post_init__(self):
        if not (0.0 < self.threshold < 1.0):
            raise ConfigError(f"labels.threshold must lie in (0, 1), got {self.threshold}")
        if self.horizon < 1:
            raise ConfigError(f"labels.horizon must be >= 1, got {self.horizon}")


@dataclass(frozen=True)
class GraphConfig:
    window: int = 7
    tau: float = 0.5
    sector_layer: bool = False
    weighted_adjacency: bool = False

    def __post_init__(self):
        if self.window < 3:
            raise ConfigError(f"graph.window must be >= 3, got {self.window}")
        if not (0.0 < self.tau <= 1.0):
            raise ConfigError(f"graph.tau must lie in (0, 1], got {self.tau}")


@dataclass(frozen=True)
class ModelConfig:
    kinds: tuple[str, ...] = MODEL_KINDS
    gcn_hidden: int = 32
    mlp_hidden: int = 16
    gru_hidden: int = 64
    sequence_length: int = 5
    stride: int = 5
    epochs: int = 50
    batch_size: int = 8
    learning_rate: float = 1e-3
    loss: str = "bce"
    focal_gamma: float = 2.0
    logistic_lr: float = 0.05
    logistic_epochs: int = 2000
    logistic_tol: float = 1e-6
    forest_trees: int = 50
    forest_max_depth: int = 6
    forest_min_leaf: int = 2

    def __post_init__(self):
        for kind in self.kinds:
            if kind not in MODEL_KINDS:
                raise ConfigError(
                    f"unknown model kind '{kind}'; expected one of {', '.join(MODEL_KINDS)}")
        if self.loss not in ("bce", "focal"):
            raise ConfigError(f"model.loss must be 'bce' or 'focal', got '{self.loss}'")
        if self.sequence_length < 1:
            raise ConfigError(f"model.sequence_length must be >= 1, got {self.sequence_length}")
        if self.stride < 1:
            raise ConfigError(f"model.stride must be >= 1, got {self.stride}")


@dataclass(frozen=True)
class SplitConfig:
    ratio: float = 0.8

    def __post_init__(self):
        if not (0.0 < self.ratio < 1.0):
            raise ConfigError(f"split.ratio must lie in (0, 1), got {self.ratio}")


@dataclass(frozen=True)
class EvaluateConfig:
    threshold: float = 0.5
    warn_gamma: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.threshold <= 1.0):
            raise ConfigError(f"evaluate.threshold must lie in [0, 1], got {self.threshold}")


@dataclass(frozen=True)
class Config:
    data: DataConfig = field(default_factory=DataConfig)
    period: PeriodConfig = field(default_factory=PeriodConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    labels: LabelConfig = field(default_factory=LabelConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    evaluate: EvaluateConfig = field(default_factory=EvaluateConfig)
    seed: int = 7
    out: str = "srr_out"

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        sections = {
            "data": DataConfig, "period": PeriodConfig, "features": FeatureConfig,
            "labels": LabelConfig, "graph": GraphConfig, "model": ModelConfig,
            "split": SplitConfig, "evaluate": EvaluateConfig,
        }
        _check_keys("config", data, set(sections) | {"seed", "out"})
        kwargs: dict[str, Any] = {}
        for name, section_cls in sections.items():
            if name in data:
                kwargs[name] = _dataclass_from(name, section_cls, data[name])
        if "seed" in data:
            seed = data["seed"]
            if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
                raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
            kwargs["seed"] = seed
        if "out" in data:
            if not isinstance(data["out"], str) or not data["out"]:
                raise ConfigError("out must be a non-empty path string")
            kwargs["out"] = data["out"]
        try:
            return cls(**kwargs)
        except TypeError as exc:  # pragma: no cover - defensive
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        def as_plain(obj):
            if hasattr(obj, "__dataclass_fields__"):
                return {f.name: as_plain(getattr(obj, f.name)) for f in fields(obj)}
            if isinstance(obj, tuple):
                return [as_plain(v) for v in obj]
            return obj
        return as_plain(self)

    def replace(self, **kwargs) -> "Config":
        from dataclasses import replace as dc_replace
        return dc_replace(self, **kwargs)


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(cfg: Config) -> str:
    payload = cfg.to_dict()
    payload.pop("out", None)
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def load_config(path: str | None, *, seed: int | None = None,
                preset: str | None = None, out: str | None = None) -> Config:
    """Read a JSON config file (optional) and apply CLI overrides."""
    if path is None:
        cfg = Config()
    else:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        cfg = Config.from_dict(raw)
    if seed is not None:
        if seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {seed}")
        cfg = cfg.replace(seed=seed)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(
                f"unknown period preset '{preset}'; expected one of {', '.join(sorted(PRESETS))}")
        cfg = cfg.replace(period=PeriodConfig(preset=preset))
    if out is not None:
        if not out:
            raise ConfigError("out must be a non-empty path string")
        cfg = cfg.replace(out=out)
    cfg.period.resolve()  # validate preset name eagerly
    return cfg
