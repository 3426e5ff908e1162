"""Pipeline configuration: JSON file, dotted overrides, strict keys.

Precedence, lowest to highest: built-in defaults, config file, the
``FATIGUE_LAB_SEED`` environment variable (master seed only), ``--set``
command-line overrides.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

SEED_ENV_VAR = "FATIGUE_LAB_SEED"


@dataclass
class PathsConfig:
    recordings: list[str] = field(default_factory=lambda: ["recording.csv"])
    labels: list[str] = field(default_factory=lambda: ["labels.csv"])
    out_dir: str = "out"


@dataclass
class SynthSection:
    n_segments: int = 2400
    class_effect: float = 1.0
    noise_std: float = 1.0


@dataclass
class FilterSection:
    low_hz: float = 4.0
    high_hz: float = 45.0
    n_taps: int = 129


@dataclass
class CnnSection:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    dropout_rate: float = 0.5
    fc_width: int = 128
    early_stop_train_acc: float | None = None


@dataclass
class BaselineSection:
    lssvm_gamma: float = 2.0
    svm_c: float = 1.0
    svm_epochs: int = 100
    knn_k: int = 50
    rf_trees: int = 200
    dt_max_depth: int = 12
    dt_min_leaf: int = 5
    logreg_l2: float = 1e-4
    logreg_max_iter: int = 20000


@dataclass
class CvSection:
    k: int = 10
    stratified: bool = False


@dataclass
class PipelineConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    schemes: list[str] = field(default_factory=lambda: ["D1200"])
    combos: list[str] = field(default_factory=lambda: ["F_Entropy"])
    classifiers: list[str] = field(default_factory=lambda: ["lr"])
    seed: int = 20240
    sampling_rate: int = 128
    entropy_bins: int = 16
    synth: SynthSection = field(default_factory=SynthSection)
    filter: FilterSection = field(default_factory=FilterSection)
    cnn: CnnSection = field(default_factory=CnnSection)
    baselines: BaselineSection = field(default_factory=BaselineSection)
    cv: CvSection = field(default_factory=CvSection)
    jobs: int = 1

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTION_TYPES = {
    "paths": PathsConfig,
    "synth": SynthSection,
    "filter": FilterSection,
    "cnn": CnnSection,
    "baselines": BaselineSection,
    "cv": CvSection,
}


def _fill_dataclass(cls, data: dict, context: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown config key {context}{sorted(unknown)[0]!r}")
    return cls(**data)


def config_from_dict(data: dict) -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    top_names = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(data) - top_names
    if unknown:
        raise ConfigError(f"unknown config key {sorted(unknown)[0]!r}")
    kwargs = {}
    for key, value in data.items():
        if key in _SECTION_TYPES:
            if not isinstance(value, dict):
                raise ConfigError(f"config section {key!r} must be an object")
            kwargs[key] = _fill_dataclass(_SECTION_TYPES[key], value, f"{key}.")
        else:
            kwargs[key] = value
    try:
        return PipelineConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad config: {exc}") from exc


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        cfg = PipelineConfig()
    else:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        cfg = config_from_dict(data)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            cfg.seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}") from None
    return cfg


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw  # bare strings allowed without quotes


def apply_overrides(cfg: PipelineConfig, overrides: list[str]) -> PipelineConfig:
    """Apply ``section.key=value`` (or ``key=value``) assignments in order."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        dotted, raw = item.split("=", 1)
        value = _parse_value(raw)
        parts = dotted.split(".")
        target = cfg
        for part in parts[:-1]:
            if not hasattr(target, part):
                raise ConfigError(f"unknown config key {dotted!r}")
            target = getattr(target, part)
        leaf = parts[-1]
        if not dataclasses.is_dataclass(target) or leaf not in {
            f.name for f in dataclasses.fields(target)
        }:
            raise ConfigError(f"unknown config key {dotted!r}")
        current = getattr(target, leaf)
        if isinstance(current, bool) and not isinstance(value, bool):
            raise ConfigError(f"{dotted} expects true/false, got {raw!r}")
        if isinstance(current, int) and not isinstance(current, bool) \
                and isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{dotted} expects an integer, got {raw!r}")
        setattr(target, leaf, value)
    return cfg
