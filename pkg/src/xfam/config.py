"""Profile configuration: YAML documents mapping profile names to tunables.

A config file can override any CompressionConfig field per profile; the
built-in ``default`` and ``code`` profiles are always available.

Example:
    profiles:
      default:
        pooling_kernel: 13
      code:
        chunk_size: 128
        delimiter: "// omitted"
    service:
      max_input_bytes: 8388608
"""

from __future__ import annotations

import dataclasses
import os
from pathlib import Path

import yaml

from .errors import InvalidConfigError
from .pipeline import BUILTIN_PROFILES, CompressionConfig

ENV_CONFIG = "XFAM_CONFIG"

_PROFILE_FIELDS = {
    f.name for f in dataclasses.fields(CompressionConfig) if f.name != "keep"
}


def resolve_config_path(flag_value: str | None) -> str | None:
    """The XFAM_CONFIG environment variable overrides the --config flag."""
    return os.environ.get(ENV_CONFIG) or flag_value


def load_profiles(path: str | Path | None) -> dict[str, CompressionConfig]:
    """Built-in profiles, overlaid with any definitions from ``path``."""
    profiles = dict(BUILTIN_PROFILES)
    if path is None:
        return profiles
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise InvalidConfigError(f"cannot load config {path}: {exc}") from exc
    if doc is None:
        return profiles
    if not isinstance(doc, dict):
        raise InvalidConfigError(f"config root must be a mapping, got {type(doc).__name__}")
    for name, overrides in (doc.get("profiles") or {}).items():
        if not isinstance(overrides, dict):
            raise InvalidConfigError(f"profile {name!r} must be a mapping")
        unknown = set(overrides) - _PROFILE_FIELDS
        if unknown:
            raise InvalidConfigError(f"profile {name!r} has unknown keys: {sorted(unknown)}")
        base = profiles.get(name, CompressionConfig())
        profiles[name] = dataclasses.replace(base, **overrides)
    return profiles


def load_service_settings(path: str | Path | None) -> dict:
    """The optional ``service`` section of a config file."""
    if path is None:
        return {}
    doc = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    section = doc.get("service") or {}
    if not isinstance(section, dict):
        raise InvalidConfigError("service section must be a mapping")
    return section
