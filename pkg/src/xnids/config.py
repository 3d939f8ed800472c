"""Pipeline configuration: one JSON/TOML file, flag and environment
overrides, and a stable hash embedded into every artifact manifest."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any


class ConfigInvalid(Exception):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"config field {field_name!r}: {message}")
        self.field = field_name


@dataclass
class SplitSection:
    train_fraction: float = 0.8
    seed: int = 0
    shuffle: bool = True


@dataclass
class ModelSection:
    family: str = "cnn"
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 1e-3
    loss: str = ""  # defaults per family: cnn -> sparse_ce, lstm -> categorical_ce
    seed: int = 0
    dropout: float = 0.3

    def resolved_loss(self) -> str:
        if self.loss:
            return self.loss
        return "sparse_ce" if self.family == "cnn" else "categorical_ce"


@dataclass
class ExplainerSection:
    background_size: int = 100
    instances: int = 100
    n_coalitions: int = 2048
    seed: int = 0


@dataclass
class PipelineConfig:
    train_path: str = "data/KDDTrain+.txt"
    out_dir: str = "runs/default"
    seed: int = 0
    split: SplitSection = field(default_factory=SplitSection)
    model: ModelSection = field(default_factory=ModelSection)
    explainer: ExplainerSection = field(default_factory=ExplainerSection)

    def validate(self) -> None:
        if not 0.0 < self.split.train_fraction < 1.0:
            raise ConfigInvalid("split.train_fraction", "must lie in (0, 1)")
        if self.model.family not in ("cnn", "lstm"):
            raise ConfigInvalid("model.family", "must be 'cnn' or 'lstm'")
        if self.model.epochs < 1:
            raise ConfigInvalid("model.epochs", "must be >= 1")
        if self.model.batch_size < 1:
            raise ConfigInvalid("model.batch_size", "must be >= 1")
        if self.explainer.background_size < 1:
            raise ConfigInvalid("explainer.background_size", "must be >= 1")
        if self.explainer.n_coalitions < 4:
            raise ConfigInvalid("explainer.n_coalitions", "must be >= 4")

    def to_jsonable(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_jsonable(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        elif isinstance(value, dict):
            out[key] = _merge({}, value)
        else:
            out[key] = value
    return out


def _from_dict(data: dict) -> PipelineConfig:
    known_sections = {"split": SplitSection, "model": ModelSection, "explainer": ExplainerSection}
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key in known_sections:
            section_cls = known_sections[key]
            valid = {f for f in section_cls.__dataclass_fields__}
            unknown = set(value) - valid
            if unknown:
                raise ConfigInvalid(f"{key}.{sorted(unknown)[0]}", "unknown field")
            kwargs[key] = section_cls(**value)
        elif key in PipelineConfig.__dataclass_fields__:
            kwargs[key] = value
        else:
            raise ConfigInvalid(key, "unknown field")
    return PipelineConfig(**kwargs)


ENV_PREFIX = "XNIDS_"

# Environment overrides: XNIDS_OUT_DIR, XNIDS_SEED, XNIDS_MODEL_FAMILY, ...
_ENV_MAP = {
    "TRAIN_PATH": ("train_path", str),
    "OUT_DIR": ("out_dir", str),
    "SEED": ("seed", int),
    "SPLIT_SEED": ("split.seed", int),
    "SPLIT_TRAIN_FRACTION": ("split.train_fraction", float),
    "MODEL_FAMILY": ("model.family", str),
    "MODEL_EPOCHS": ("model.epochs", int),
    "MODEL_BATCH_SIZE": ("model.batch_size", int),
    "MODEL_LEARNING_RATE": ("model.learning_rate", float),
    "MODEL_SEED": ("model.seed", int),
    "EXPLAINER_INSTANCES": ("explainer.instances", int),
    "EXPLAINER_BACKGROUND_SIZE": ("explainer.background_size", int),
    "EXPLAINER_N_COALITIONS": ("explainer.n_coalitions", int),
    "EXPLAINER_SEED": ("explainer.seed", int),
}


def _env_overrides() -> dict:
    out: dict = {}
    for suffix, (dotted, cast) in _ENV_MAP.items():
        raw = os.environ.get(ENV_PREFIX + suffix)
        if raw is None:
            continue
        target = out
        parts = dotted.split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
        try:
            target[parts[-1]] = cast(raw) if cast is not bool else raw.lower() in ("1", "true")
        except ValueError:
            raise ConfigInvalid(dotted, f"cannot parse environment override {raw!r}")
    return out


def load_config(path: str | Path | None, overrides: dict | None = None) -> PipelineConfig:
    """File -> environment -> explicit flag overrides, later wins."""
    data: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigInvalid("config", f"file not found: {p}")
        if p.suffix == ".toml":
            try:
                import tomllib
            except ImportError:
                try:
                    import tomli as tomllib  # type: ignore[no-redef]
                except ImportError:
                    raise ConfigInvalid("config", "TOML configs need Python 3.11+ or the tomli package")
            data = tomllib.loads(p.read_text())
        else:
            data = json.loads(p.read_text())
    data = _merge(data, _env_overrides())
    if overrides:
        data = _merge(data, {k: v for k, v in overrides.items() if v is not None})
    config = _from_dict(data)
    config.validate()
    return config
