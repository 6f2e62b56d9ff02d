"""Flat key-value experiment configs with dotted section prefixes.

Format, one entry per line:

    # comment
    field.s = 0.95
    qdelta.deltas = 3.16227766016838e-2, 1e-2, 3.16227766016838e-3

Every subcommand declares a schema; unknown keys are rejected and every
parse failure names the offending key, so a config diff is always the whole
story of what changed between two runs.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["ConfigError", "Schema", "Option", "parse_config_text", "load_config"]


class ConfigError(Exception):
    """Invalid configuration; the message names the offending key."""


def parse_config_text(text):
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def load_config(path):
    try:
        with open(path) as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


# -- typed options -------------------------------------------------------------


def _fail(key, value, expected):
    raise ConfigError(f"key {key!r}: expected {expected}, got {value!r}")


def parse_int(key, value):
    try:
        return int(value)
    except ValueError:
        _fail(key, value, "an integer")


def parse_float(key, value):
    try:
        return float(value)
    except ValueError:
        _fail(key, value, "a number")


def parse_bool(key, value):
    lowered = value.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    _fail(key, value, "a boolean")


def parse_str(key, value):
    return value


def parse_floats(key, value):
    try:
        return tuple(float(tok) for tok in value.split(",") if tok.strip())
    except ValueError:
        _fail(key, value, "a comma-separated list of numbers")


def parse_ints(key, value):
    try:
        return tuple(int(tok) for tok in value.split(",") if tok.strip())
    except ValueError:
        _fail(key, value, "a comma-separated list of integers")


def choice_of(*allowed):
    def parse(key, value):
        if value not in allowed:
            _fail(key, value, f"one of {sorted(allowed)}")
        return value
    return parse


_REQUIRED = object()


@dataclass(frozen=True)
class Option:
    parser: object
    default: object = _REQUIRED

    @property
    def required(self):
        return self.default is _REQUIRED


class Schema:
    """Declared option set for one subcommand."""

    def __init__(self, name, options):
        self.name = name
        self.options = options

    def resolve(self, raw):
        unknown = sorted(set(raw) - set(self.options))
        if unknown:
            raise ConfigError(
                f"unknown key {unknown[0]!r} for subcommand {self.name!r} "
                f"(known: {', '.join(sorted(self.options))})")
        resolved = {}
        for key, opt in self.options.items():
            if key in raw:
                resolved[key] = opt.parser(key, raw[key])
            elif opt.required:
                raise ConfigError(f"missing required key {key!r} for {self.name!r}")
            else:
                resolved[key] = opt.default
        return resolved
