"""Pipeline configuration (YAML). Secrets come from the environment only."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any

import yaml

from .dictionary import ALL_DIRECTIONS, DictionaryError, LanguagePair
from .filtering import FilterError, QEScorerConfig
from .metrics import MetricConfig, MetricError


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GenConfig:
    count: int = 20
    pairs_per_prompt: int = 5
    mode_ratio: float = 0.7
    temperature_range: tuple[float, float] = (0.3, 0.7)
    parallelism: int = 4


@dataclass(frozen=True)
class PostEditConfig:
    temperature: float = 0.3
    parallelism: int = 4
    retries: int = 1


@dataclass(frozen=True)
class BackendConfig:
    mock: bool = True
    generation_endpoint: str | None = None
    api_key_env: str = "TERMFORGE_API_KEY"


@dataclass(frozen=True)
class PipelineConfig:
    directions: tuple[LanguagePair, ...] = ALL_DIRECTIONS
    gen: GenConfig = field(default_factory=GenConfig)
    filter: QEScorerConfig = field(default_factory=QEScorerConfig)
    postedit: PostEditConfig = field(default_factory=PostEditConfig)
    metrics: MetricConfig = field(default_factory=MetricConfig)
    backends: BackendConfig = field(default_factory=BackendConfig)
    seed: int = 0


def _check(path: str, ok: bool, message: str) -> None:
    if not ok:
        raise ConfigError(f"{path}: {message}")


def _build(cls, data: Any, path: str):
    if data is None:
        return cls()
    _check(path or "<root>", isinstance(data, dict), "expected a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    _check(f"{path}.{unknown[0]}".lstrip(".") if unknown else path, not unknown, "unknown key")
    kwargs = {}
    for name, value in data.items():
        key_path = f"{path}.{name}".lstrip(".")
        default = getattr(cls(), name) if name != "directions" else None
        if name == "directions":
            _check(key_path, isinstance(value, list) and value, "expected a non-empty list")
            try:
                kwargs[name] = tuple(LanguagePair.parse(v) for v in value)
            except (DictionaryError, AttributeError) as exc:
                raise ConfigError(f"{key_path}: {exc}") from None
        elif is_dataclass(default):
            kwargs[name] = _build(type(default), value, key_path)
        elif name == "temperature_range":
            _check(key_path, isinstance(value, list) and len(value) == 2, "expected [low, high]")
            kwargs[name] = (float(value[0]), float(value[1]))
        else:
            if isinstance(default, bool):
                _check(key_path, isinstance(value, bool), "expected true/false")
            elif isinstance(default, (int, float)) and not isinstance(default, bool):
                _check(key_path, isinstance(value, (int, float)) and not isinstance(value, bool), "expected a number")
                if isinstance(default, int) and not isinstance(default, bool):
                    _check(key_path, float(value).is_integer(), "expected an integer")
                    value = int(value)
            kwargs[name] = value
    try:
        obj = cls(**kwargs)
    except (FilterError, MetricError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return obj


def validate(cfg: PipelineConfig) -> PipelineConfig:
    lo, hi = cfg.gen.temperature_range
    _check("gen.temperature_range", 0.0 <= lo <= hi <= 1.0, "must lie within [0, 1]")
    _check("gen.mode_ratio", 0.0 <= cfg.gen.mode_ratio <= 1.0, "must lie within [0, 1]")
    _check("gen.count", cfg.gen.count >= 1, "must be >= 1")
    _check("gen.pairs_per_prompt", cfg.gen.pairs_per_prompt >= 1, "must be >= 1")
    _check("gen.parallelism", cfg.gen.parallelism >= 1, "must be >= 1")
    _check("postedit.parallelism", cfg.postedit.parallelism >= 1, "must be >= 1")
    _check("postedit.temperature", 0.0 <= cfg.postedit.temperature <= 1.0, "must lie within [0, 1]")
    _check("postedit.retries", cfg.postedit.retries >= 0, "must be >= 0")
    _check("backends.generation_endpoint", cfg.backends.mock or bool(cfg.backends.generation_endpoint),
           "required unless mock is true")
    return cfg


def parse_config(data: Any) -> PipelineConfig:
    return validate(_build(PipelineConfig, data or {}, ""))


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return validate(PipelineConfig())
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    return parse_config(data)
