"""Flat ``key = value`` config files mapped onto frozen dataclasses."""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path

from .errors import ConfigError

_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


def coerce(text: str, annotation: str):
    """Convert ``text`` according to a dataclass field annotation string."""
    text = text.strip()
    optional = "None" in annotation
    if optional and text.lower() in ("none", ""):
        return None
    base = annotation.replace("| None", "").strip()
    if base == "bool":
        low = text.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if base == "int":
        return int(text)
    if base == "float":
        return float(text)
    return text


def parse_flat(text: str, cls, source: str = "<config>"):
    """Build ``cls`` from ``key = value`` lines; '#' starts a comment, unknown keys are errors."""
    known = {f.name: str(f.type) for f in fields(cls)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = coerce(val, known[key])
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {val!r}") from exc
    return cls(**values)


def load_flat(path, cls):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_flat(text, cls, str(path))


def dump_flat(cfg) -> str:
    return "".join(f"{f.name} = {getattr(cfg, f.name)}\n" for f in fields(cfg))
