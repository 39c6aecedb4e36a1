"""Run configuration: defaults, YAML file, then command-line flags.

One structured file holds a section per subsystem; later layers override
earlier ones key-by-key, and explicit flags always win. The fully
resolved dictionary is what gets embedded in every artifact (logs, CSVs,
policy files) so any output can be traced back to the exact settings
that produced it.

Unknown keys are rejected rather than ignored — a typo that silently
falls back to a default is the worst kind of configuration bug.
"""

from __future__ import annotations

import dataclasses
import json
from typing import Any, Optional

import yaml

from .device import DeviceConfig, WaveformParams
from .errors import ConfigError
from .geometry import Rotation3
from .haptics import CONDITIONS, PipelineConfig
from .presets import TASK_NAMES, pipeline_config, task_config
from .service import ServiceConfig
from .session import SessionSetup
from .sim import TaskConfig

DEFAULTS: dict[str, Any] = {
    "task": "key",
    "condition": "C4",
    "seed": 0,
    "task_overrides": {},       # field -> value, applied over the preset
    "pipeline": {},             # PipelineConfig fields; rotation as 9 numbers
    "device": {},               # WaveformParams + half_rotation
    "expert": {},               # scripted-operator parameters
    "train": {                  # behavior-cloning hyperparameters
        "hidden": 64,
        "horizon": 10,
        "replan": 5,
        "epochs": 500,
        "lr": 1e-3,
        "momentum": 0.9,
    },
    "afc": {
        "n_choices": 8,
        "trials": 160,
        "kappa": 24.0,
        "attenuation_y": 0.4,
    },
    "service": {
        "host": "127.0.0.1",
        "tcp_port": 7421,
        "ws_port": 7422,
        "tick_mode": "paced",
        "ui_root": None,
    },
    "retarget_scale": 1.0,
    "output_dir": "out",
}


def _deep_merge(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key: {where}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config section {where} must be a mapping")
            out[key] = _deep_merge(base[key], value, where)
        else:
            out[key] = value
    return out


def _merge_free(base: dict, override: dict) -> dict:
    """Merge where the base doesn't enumerate the keys (per-object
    sections validated later against the dataclass fields)."""
    out = dict(base)
    out.update(override)
    return out


def load_config(path: Optional[str] = None, flags: Optional[dict] = None) -> dict:
    """Resolve defaults <- file <- flags into one plain dictionary."""
    cfg = json.loads(json.dumps(DEFAULTS))  # deep copy
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            try:
                loaded = yaml.safe_load(fh) or {}
            except yaml.YAMLError as exc:
                raise ConfigError(f"cannot parse config file {path}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a mapping")
        cfg = _apply_layer(cfg, loaded)
    if flags:
        cfg = _apply_layer(cfg, flags)
    _validate(cfg)
    return cfg


def _apply_layer(cfg: dict, layer: dict) -> dict:
    free_sections = ("task_overrides", "pipeline", "device", "expert")
    out = dict(cfg)
    for key, value in layer.items():
        if value is None:   # unset flag; section-internal nulls still merge
            continue
        if key not in cfg:
            raise ConfigError(f"unknown config key: {key}")
        if key in free_sections:
            if not isinstance(value, dict):
                raise ConfigError(f"config section {key} must be a mapping")
            out[key] = _merge_free(cfg[key], value)
        elif isinstance(cfg[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config section {key} must be a mapping")
            out[key] = _deep_merge(cfg[key], value, key)
        else:
            out[key] = value
    return out


def _validate(cfg: dict) -> None:
    if cfg["task"] not in TASK_NAMES:
        raise ConfigError(
            f"unknown task {cfg['task']!r}; choose from {', '.join(TASK_NAMES)}"
        )
    if cfg["condition"] not in CONDITIONS:
        raise ConfigError(
            f"unknown condition {cfg['condition']!r}; choose from {', '.join(CONDITIONS)}"
        )
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")


def parse_set_flags(pairs: list[str]) -> dict:
    """Turn ``section.key=value`` strings into a nested override dict.
    Values parse as YAML scalars, so numbers and booleans come out typed."""
    out: dict = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects section.key=value, got {pair!r}")
        dotted, raw = pair.split("=", 1)
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            value = raw
        node = out
        keys = dotted.split(".")
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set path conflicts at {key} in {pair!r}")
        node[keys[-1]] = value
    return out


def resolved_text(cfg: dict) -> str:
    """The resolved config as stable, human-readable JSON."""
    return json.dumps(cfg, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# constructors: dictionaries to domain objects


def _replace_fields(obj, section: dict, what: str):
    if not section:
        return obj
    names = {f.name for f in dataclasses.fields(obj)}
    unknown = set(section) - names
    if unknown:
        raise ConfigError(f"unknown {what} fields: {', '.join(sorted(unknown))}")
    coerced = {}
    for key, value in section.items():
        if isinstance(value, list):
            value = tuple(value)
        coerced[key] = value
    return dataclasses.replace(obj, **coerced)


def make_task(cfg: dict) -> TaskConfig:
    return _replace_fields(task_config(cfg["task"]), cfg["task_overrides"], "task")


def make_pipeline(cfg: dict) -> PipelineConfig:
    section = dict(cfg["pipeline"])
    rotation = section.pop("rotation", None)
    base = pipeline_config(cfg["task"])
    if rotation is not None:
        flat = tuple(float(v) for v in rotation)
        if len(flat) != 9:
            raise ConfigError("pipeline.rotation must be 9 numbers, row-major")
        base = dataclasses.replace(base, rotation=Rotation3(flat))
    return _replace_fields(base, section, "pipeline")


def make_wave(cfg: dict) -> WaveformParams:
    section = {k: v for k, v in cfg["device"].items() if k != "half_rotation"}
    return _replace_fields(WaveformParams(), section, "device")


def make_device(cfg: dict) -> DeviceConfig:
    half = cfg["device"].get("half_rotation", False)
    return DeviceConfig(half_rotation=bool(half))


def make_service_config(cfg: dict, log_path: str) -> ServiceConfig:
    s = cfg["service"]
    return ServiceConfig(host=s["host"], tcp_port=s["tcp_port"], ws_port=s["ws_port"],
                         tick_mode=s["tick_mode"], ui_root=s["ui_root"],
                         log_path=log_path)


def make_session_setup(cfg: dict) -> SessionSetup:
    return SessionSetup(
        task_name=cfg["task"],
        task=make_task(cfg),
        pipeline=make_pipeline(cfg),
        wave=make_wave(cfg),
        device=make_device(cfg),
        condition=cfg["condition"],
        seed=cfg["seed"],
        scale=float(cfg["retarget_scale"]),
        header={"config": cfg},
    )
