"""Declarative run configuration (YAML or JSON) with fail-closed validation."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .events import TIME_UNITS
from .exceptions import ConfigError
from .fit import FitConfig

DEFAULT_GROUPS = ("pol", "reddit", "twitter", "trolls")


@dataclass(frozen=True)
class SimulateConfig:
    horizon: float = 1000.0
    n_sequences: int = 1


@dataclass(frozen=True)
class CharacterizeConfig:
    top_n: int = 20
    # optional baseline cohort selection: {"reference": cohort, "pool": path, "size": n}
    baseline_match: dict | None = None
    since: str | None = None


@dataclass(frozen=True)
class RunConfig:
    events: str | None = None
    redirect_map: str | None = None
    state_domains: str | None = None
    news_domains: str | None = None
    tweets: dict = field(default_factory=dict)
    output_dir: str = "out"
    groups: tuple[str, ...] = DEFAULT_GROUPS
    time_unit: str = "hours"
    horizon: float | None = None
    padding: float = 24.0
    min_total_events: int = 1
    fit: FitConfig = field(default_factory=FitConfig)
    include_degenerate: bool = False
    parallel: int | None = None
    seed: int = 0
    simulate: SimulateConfig = field(default_factory=SimulateConfig)
    characterize: CharacterizeConfig = field(default_factory=CharacterizeConfig)

    @property
    def n_jobs(self) -> int:
        return self.parallel if self.parallel else (os.cpu_count() or 1)


_PATH_KEYS = ("events", "redirect_map", "state_domains", "news_domains")


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}; allowed: {sorted(names)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _resolve(base: Path, p):
    if p is None:
        return None
    path = Path(p)
    return str(path if path.is_absolute() else base / path)


def parse_config(data: dict[str, Any] | None, base_dir=".") -> RunConfig:
    data = dict(data or {})
    base = Path(base_dir)
    sub = {}
    if "fit" in data:
        fit = dict(data.pop("fit") or {})
        for key in ("beta_grid", "mu_prior", "w_prior"):
            if key in fit:
                fit[key] = tuple(fit[key])
        sub["fit"] = _build(FitConfig, fit, "fit")
    if "simulate" in data:
        sub["simulate"] = _build(SimulateConfig, dict(data.pop("simulate") or {}), "simulate")
    if "characterize" in data:
        sub["characterize"] = _build(CharacterizeConfig, dict(data.pop("characterize") or {}), "characterize")
    for key in _PATH_KEYS:
        if key in data:
            data[key] = _resolve(base, data[key])
    if "tweets" in data:
        if not isinstance(data["tweets"], dict):
            raise ConfigError("tweets: expected a mapping of cohort label to archive path")
        data["tweets"] = {str(k): _resolve(base, v) for k, v in data["tweets"].items()}
    if "output_dir" in data:
        data["output_dir"] = _resolve(base, data["output_dir"])
    if "groups" in data:
        data["groups"] = tuple(str(g) for g in data["groups"])
    cfg = _build(RunConfig, {**data, **sub}, "config")
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if len(cfg.groups) < 2 or len(set(cfg.groups)) != len(cfg.groups):
        raise ConfigError(f"groups must be >= 2 unique labels, got {list(cfg.groups)}")
    if cfg.time_unit not in TIME_UNITS:
        raise ConfigError(f"time_unit must be one of {sorted(TIME_UNITS)}, got {cfg.time_unit!r}")
    if cfg.horizon is not None and not cfg.horizon > 0:
        raise ConfigError("horizon must be > 0")
    if cfg.padding < 0:
        raise ConfigError("padding must be >= 0")
    if cfg.parallel is not None and cfg.parallel < 1:
        raise ConfigError("parallel must be >= 1")
    paths = [getattr(cfg, k) for k in _PATH_KEYS] + list(cfg.tweets.values())
    bm = cfg.characterize.baseline_match
    if bm:
        missing = {"reference", "pool", "size"} - set(bm)
        if missing:
            raise ConfigError(f"characterize.baseline_match missing keys {sorted(missing)}")
        paths.append(bm["pool"])
    for p in paths:
        if p is not None and not Path(p).exists():
            raise ConfigError(f"path does not exist: {p}")


def load_config(path) -> RunConfig:
    if path is None:
        return parse_config({}, ".")
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg_dir = path.parent
    if isinstance(data, dict) and "characterize" in data and isinstance(data["characterize"], dict):
        bm = data["characterize"].get("baseline_match")
        if isinstance(bm, dict) and "pool" in bm:
            bm["pool"] = _resolve(cfg_dir, bm["pool"])
    return parse_config(data, cfg_dir)


def override(cfg: RunConfig, **changes) -> RunConfig:
    changes = {k: v for k, v in changes.items() if v is not None}
    return dataclasses.replace(cfg, **changes) if changes else cfg
