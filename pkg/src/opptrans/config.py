"""Flat key-value experiment configuration and seed derivation.

Config files are UTF-8 text, one ``section.key = value`` per line, ``#``
comments.  Per-stage seeds derive from a documented hash of
(master seed, stage name, index) so sweep points stay isolated.
"""

from __future__ import annotations

import hashlib


class ConfigError(ValueError):
    pass


def parse_config_text(text):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


class Config:
    def __init__(self, values=None):
        self.values = dict(values or {})

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                return cls(parse_config_text(fh.read()))
        except FileNotFoundError:
            raise ConfigError(f"missing config file: {path}")

    def with_override(self, key, value):
        merged = dict(self.values)
        merged[key] = str(value)
        return Config(merged)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def getfloat(self, key, default=None):
        v = self.values.get(key)
        if v is None or v == "":
            return default
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {v!r}")

    def getint(self, key, default=None):
        v = self.getfloat(key, default)
        return None if v is None else int(v)

    def getbool(self, key, default=False):
        v = self.values.get(key)
        if v is None:
            return default
        if v.lower() in ("1", "true", "yes", "on"):
            return True
        if v.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {v!r}")

    def getlist(self, key, default=()):
        v = self.values.get(key)
        if v is None or v == "":
            return list(default)
        return [item.strip() for item in v.split(",") if item.strip()]


def derive_seed(master_seed, stage, index=0):
    """Deterministic per-stage seed from the master seed."""
    digest = hashlib.sha256(
        f"{master_seed}/{stage}/{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2 ** 63)
