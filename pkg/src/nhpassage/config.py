"""Plain key=value config files for scenario runs.

One ``key = value`` pair per line; ``#`` starts a comment; blank lines are
ignored.  Recognized keys mirror the CLI flags: ``scenario``,
``direction``, ``loops``, ``T``, ``dt``, ``gamma_scale``, ``tolerance``,
``csv``, ``svg``.  Values stay strings here; the CLI casts them.
"""

from __future__ import annotations

from .exceptions import ConfigError

__all__ = ["KNOWN_KEYS", "read_config"]

KNOWN_KEYS = (
    "scenario", "direction", "loops", "T", "dt",
    "gamma_scale", "tolerance", "csv", "svg",
)


def read_config(path) -> dict[str, str]:
    """Parse a key=value file; unknown keys and malformed lines are errors."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in KNOWN_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if not value:
                raise ConfigError(f"{path}:{lineno}: empty value for {key!r}")
            out[key] = value
    return out
