"""Flat ``key = value`` configuration files."""

from __future__ import annotations

from typing import Dict, Mapping

from .errors import FormatError


def read_config(path) -> Dict[str, str]:
    """Read ``key = value`` lines; ``#`` starts a comment line.

    Later keys override earlier ones.
    """
    out: Dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep or not key:
                raise FormatError("expected 'key = value'", path=path, lineno=lineno)
            out[key] = value.strip()
    return out


def format_config(values: Mapping[str, object]) -> str:
    lines = []
    for key, value in values.items():
        if value is None:
            continue
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
