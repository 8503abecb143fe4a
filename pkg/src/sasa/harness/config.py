"""Flat ``key = value`` configuration files.

Blank lines and ``#`` comments are ignored.  Keys may use dashes or
underscores.  Values stay strings here; typing happens when the merged
settings are turned into a config object.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path


class ConfigError(ValueError):
    pass


_ALIASES = {"max_iters": "max_iterations"}


def normalize_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    return _ALIASES.get(key, key)


def parse_config_text(text: str, known: set[str] | None = None, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = normalize_key(key)
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if known is not None and key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def load_config(path, known: set[str] | None = None) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, known, str(path))


_BOOL = {"1": True, "true": True, "yes": True, "0": False, "false": False, "no": False}


def coerce(value, kind: type):
    """Convert a string setting to ``kind`` (bool, int, float or str)."""
    if not isinstance(value, str):
        return kind(value)
    try:
        if kind is bool:
            return _BOOL[value.lower()]
        if kind is int:
            return int(float(value)) if "e" in value.lower() else int(value)
        return kind(value)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read {value!r} as {kind.__name__}") from exc


def build(cls, settings: dict):
    """Instantiate dataclass ``cls`` from settings, ignoring unrelated keys.

    Field types are taken from the defaults, so every field needs one.
    """
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in settings and settings[f.name] is not None:
            kwargs[f.name] = coerce(settings[f.name], type(f.default))
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
