"""INI scenario files.

A scenario file has a ``[scenario]`` section naming the scenario and its seed,
and a ``[parameters]`` section with scenario-specific keys::

    [scenario]
    name = counterexample-2
    seed = 7

    [parameters]
    truncation = 32
    t = 1.0

Every key is validated against the scenario's parameter table before anything
runs; unknown keys, missing seeds and unparsable values raise
:class:`~sqlab.errors.ConfigError`.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

__all__ = ["Param", "ScenarioConfig", "load_config", "parse_config", "coerce"]


@dataclass(frozen=True)
class Param:
    """Declared parameter: ``kind`` is int, float, str, bool, floats or ints."""

    kind: str
    default: object
    help: str = ""


def _floats(text):
    return [float(x) for x in text.replace(",", " ").split()]


def _ints(text):
    return [int(x) for x in text.replace(",", " ").split()]


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PARSERS = {"int": int, "float": float, "str": str.strip, "bool": _bool, "floats": _floats, "ints": _ints}


def coerce(kind, text):
    return _PARSERS[kind](text)


@dataclass
class ScenarioConfig:
    name: str
    seed: int
    params: dict = field(default_factory=dict)
    source: str | None = None


def parse_config(text, schema_for, source=None):
    """Parse INI ``text``; ``schema_for(name)`` returns the parameter table or raises KeyError."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    extra = set(cp.sections()) - {"scenario", "parameters"}
    if extra:
        raise ConfigError(f"unknown sections: {sorted(extra)}")
    if not cp.has_section("scenario"):
        raise ConfigError("missing [scenario] section")
    sc = cp["scenario"]
    unknown = set(sc) - {"name", "seed"}
    if unknown:
        raise ConfigError(f"unknown keys in [scenario]: {sorted(unknown)}")
    name = sc.get("name", "").strip()
    if not name:
        raise ConfigError("[scenario] needs a name")
    try:
        schema = schema_for(name)
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}") from None
    if "seed" not in sc:
        raise ConfigError("[scenario] needs an explicit seed")
    try:
        seed = int(sc["seed"])
    except ValueError:
        raise ConfigError(f"seed must be an integer, got {sc['seed']!r}") from None
    if seed < 0:
        raise ConfigError("seed must be nonnegative")

    params = {key: p.default for key, p in schema.items()}
    if cp.has_section("parameters"):
        for key, raw in cp["parameters"].items():
            if key not in schema:
                raise ConfigError(f"unknown parameter {key!r} for scenario {name!r}")
            try:
                params[key] = coerce(schema[key].kind, raw)
            except ValueError as exc:
                raise ConfigError(f"parameter {key!r}: {exc}") from None
    return ScenarioConfig(name, seed, params, source)


def load_config(path, schema_for):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, schema_for, source=str(path))
