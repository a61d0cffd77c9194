"""Run configuration: the one place paths, grids and defaults come from.

Precedence is file < flags: a config file (JSON, schema-versioned)
supplies base values and individual CLI flags override single fields.
Bundled data ships inside the package, so every command runs out of the
box against the synthetic dataset and recorded fixtures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .llm.prompts import BATCH_SIZE_GRID, CLASSIFY_N_GRID, GENERATION_N_GRID
from .llm.provider import DEFAULT_API_KEY_ENV
from .model import InjectionWindow
from .sim.run import PaceMode
from .trials import TcDefaults

SCHEMA_VERSION = 1

PROVIDER_FIXTURE = "fixture"
PROVIDER_LIVE = "live"


def bundled(*parts: str) -> Path:
    """Path to a file bundled under the package's data directory."""
    return Path(str(resources.files("autofi").joinpath("data", *parts)))


DEFAULT_TC_DEFAULTS = TcDefaults(
    window=InjectionWindow(175.0, 375.0),
    sensor_params_obj={"type": "delay", "tau_s": 0.5},
    actuator_params_obj={"type": "stuck_at", "value": 0.0},
)


@dataclass(frozen=True)
class RunConfig:
    # inputs
    dataset: Path = field(default_factory=lambda: bundled("fsr", "dataset.jsonl"))
    catalog_components: Path = field(default_factory=lambda: bundled("catalog", "components.json"))
    catalog_sensors: Path = field(default_factory=lambda: bundled("catalog", "sensors.json"))
    templates_dir: Path = field(default_factory=lambda: bundled("templates"))
    plant_config: Path = field(default_factory=lambda: bundled("plant", "plant_config.json"))
    cycle: Optional[Path] = None  # None -> built-in synthetic default cycle
    fixture: Path = field(default_factory=lambda: bundled("fixtures", "gpt-4o.jsonl"))
    out_dir: Path = Path("out")

    # provider
    provider_kind: str = PROVIDER_FIXTURE
    endpoint: str = "https://api.openai.com/v1"
    model: str = "gpt-4o"
    temperature: float = 0.2
    seed: int = 42
    api_key_env: str = DEFAULT_API_KEY_ENV
    timeout_s: float = 60.0
    max_format_retries: int = 2
    parallelism: int = 1

    # trial grids
    n_grid_classify: tuple[int, ...] = CLASSIFY_N_GRID
    n_grid_generate: tuple[int, ...] = GENERATION_N_GRID
    bs_grid: tuple[int, ...] = (2, 3, 5)
    pool_size: int = 10
    dropped_sensors: tuple[str, ...] = ("WSA", "ST")
    allow_off_grid: bool = False

    # execution
    tc_defaults: TcDefaults = DEFAULT_TC_DEFAULTS
    cycle_duration_s: float = 400.0
    cycle_dt_s: float = 0.01
    pace: str = "afap"
    threshold_fraction: float = 0.05
    channel_thresholds: tuple[tuple[str, float], ...] = ()
    inject_limit: int = 0  # 0 = no limit

    def validated(self) -> "RunConfig":
        """Check path existence and grid membership; ConfigError on violation."""
        for name in ("dataset", "catalog_components", "catalog_sensors", "templates_dir", "plant_config"):
            p = getattr(self, name)
            if not Path(p).exists():
                raise ConfigError(f"{name} path does not exist: {p}")
        if self.cycle is not None and not Path(self.cycle).exists():
            raise ConfigError(f"cycle path does not exist: {self.cycle}")
        if self.provider_kind not in (PROVIDER_FIXTURE, PROVIDER_LIVE):
            raise ConfigError(f"provider must be 'fixture' or 'live', got {self.provider_kind!r}")
        if self.provider_kind == PROVIDER_FIXTURE and not Path(self.fixture).exists():
            raise ConfigError(f"fixture recording does not exist: {self.fixture}")
        try:
            PaceMode.parse(self.pace)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.allow_off_grid:
            for n in self.n_grid_classify:
                if n not in CLASSIFY_N_GRID:
                    raise ConfigError(f"classification N={n} outside grid {CLASSIFY_N_GRID}")
            for n in self.n_grid_generate:
                if n not in GENERATION_N_GRID:
                    raise ConfigError(f"generation N={n} outside grid {GENERATION_N_GRID}")
            for bs in self.bs_grid:
                if bs not in BATCH_SIZE_GRID:
                    raise ConfigError(f"batch size {bs} outside grid {BATCH_SIZE_GRID}")
        return self

    def to_json_obj(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "dataset": str(self.dataset),
            "catalog_components": str(self.catalog_components),
            "catalog_sensors": str(self.catalog_sensors),
            "templates_dir": str(self.templates_dir),
            "plant_config": str(self.plant_config),
            "cycle": None if self.cycle is None else str(self.cycle),
            "fixture": str(self.fixture),
            "out_dir": str(self.out_dir),
            "provider_kind": self.provider_kind,
            "endpoint": self.endpoint,
            "model": self.model,
            "temperature": self.temperature,
            "seed": self.seed,
            "api_key_env": self.api_key_env,
            "timeout_s": self.timeout_s,
            "max_format_retries": self.max_format_retries,
            "parallelism": self.parallelism,
            "n_grid_classify": list(self.n_grid_classify),
            "n_grid_generate": list(self.n_grid_generate),
            "bs_grid": list(self.bs_grid),
            "pool_size": self.pool_size,
            "dropped_sensors": list(self.dropped_sensors),
            "allow_off_grid": self.allow_off_grid,
            "tc_defaults": self.tc_defaults.to_json_obj(),
            "cycle_duration_s": self.cycle_duration_s,
            "cycle_dt_s": self.cycle_dt_s,
            "pace": self.pace,
            "threshold_fraction": self.threshold_fraction,
            "channel_thresholds": {k: v for k, v in self.channel_thresholds},
            "inject_limit": self.inject_limit,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "RunConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config file must contain a JSON object")
        version = obj.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(f"config schema_version must be {SCHEMA_VERSION}, got {version!r}")
        kwargs: dict = {}
        path_fields = (
            "dataset",
            "catalog_components",
            "catalog_sensors",
            "templates_dir",
            "plant_config",
            "fixture",
            "out_dir",
        )
        for name in path_fields:
            if name in obj:
                kwargs[name] = Path(obj[name])
        if "cycle" in obj:
            kwargs["cycle"] = None if obj["cycle"] is None else Path(obj["cycle"])
        scalar_fields = (
            "provider_kind",
            "endpoint",
            "model",
            "temperature",
            "seed",
            "api_key_env",
            "timeout_s",
            "max_format_retries",
            "parallelism",
            "pool_size",
            "allow_off_grid",
            "cycle_duration_s",
            "cycle_dt_s",
            "pace",
            "threshold_fraction",
            "inject_limit",
        )
        for name in scalar_fields:
            if name in obj:
                kwargs[name] = obj[name]
        for name in ("n_grid_classify", "n_grid_generate", "bs_grid"):
            if name in obj:
                kwargs[name] = tuple(int(v) for v in obj[name])
        if "dropped_sensors" in obj:
            kwargs["dropped_sensors"] = tuple(obj["dropped_sensors"])
        if "tc_defaults" in obj:
            kwargs["tc_defaults"] = TcDefaults.from_json_obj(obj["tc_defaults"])
        if "channel_thresholds" in obj:
            kwargs["channel_thresholds"] = tuple(obj["channel_thresholds"].items())
        known = set(cls.__dataclass_fields__) | {"schema_version"}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        return cls.from_json_obj(obj)

    def override(self, **kwargs) -> "RunConfig":
        """Apply non-None flag overrides on top of this config."""
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **updates) if updates else self


def parse_grid(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"grid must be a comma-separated list of integers, got {text!r}") from None
