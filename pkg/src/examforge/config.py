"""Config file loading for policies, site rules, and adapter settings.

Accepts JSON, YAML, or TOML. The interpreter here is Python 3.10-compatible:
``tomllib`` landed in 3.11, so ``.toml`` files go through a small reader that
covers the subset these configs actually use — ``[section]`` and
``[a.b]`` tables, ``key = value`` with strings, ints, floats, booleans, and
single-line arrays of scalars. Anything fancier should use YAML or JSON.
"""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Any

import yaml


class ConfigError(Exception):
    """Unreadable or malformed configuration."""


def load_config(path: str | Path) -> dict[str, Any]:
    """Load a config file, dispatching on extension."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    suffix = path.suffix.lower()
    if suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    elif suffix in (".yaml", ".yml"):
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    elif suffix == ".toml":
        data = parse_toml(text, source=str(path))
    else:
        raise ConfigError(f"{path}: unsupported config extension {suffix!r}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a table/object")
    return data


_SECTION_RE = re.compile(r"^\[([A-Za-z0-9_.\-]+)\]$")
_KEY_RE = re.compile(r"^([A-Za-z0-9_\-]+)\s*=\s*(.+)$")


def parse_toml(text: str, source: str = "<config>") -> dict[str, Any]:
    """Parse the supported TOML subset. Line numbers appear in errors."""
    root: dict[str, Any] = {}
    table = root
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw_line).strip()
        if not line:
            continue
        section = _SECTION_RE.match(line)
        if section:
            table = root
            for part in section.group(1).split("."):
                table = table.setdefault(part, {})
                if not isinstance(table, dict):
                    raise ConfigError(
                        f"{source}:{line_no}: section path collides with a value"
                    )
            continue
        keyval = _KEY_RE.match(line)
        if not keyval:
            raise ConfigError(f"{source}:{line_no}: expected 'key = value' or [section]")
        key, raw_value = keyval.group(1), keyval.group(2).strip()
        table[key] = _parse_value(raw_value, source, line_no)
    return root


def _strip_comment(line: str) -> str:
    out: list[str] = []
    in_string: str | None = None
    for ch in line:
        if in_string:
            out.append(ch)
            if ch == in_string:
                in_string = None
            continue
        if ch in ("'", '"'):
            in_string = ch
            out.append(ch)
            continue
        if ch == "#":
            break
        out.append(ch)
    return "".join(out)


def _parse_value(raw: str, source: str, line_no: int) -> Any:
    if raw.startswith("[") and raw.endswith("]"):
        inner = raw[1:-1].strip()
        if not inner:
            return []
        return [
            _parse_scalar(part.strip(), source, line_no)
            for part in _split_array(inner, source, line_no)
        ]
    return _parse_scalar(raw, source, line_no)


def _split_array(inner: str, source: str, line_no: int) -> list[str]:
    parts: list[str] = []
    current: list[str] = []
    in_string: str | None = None
    for ch in inner:
        if in_string:
            current.append(ch)
            if ch == in_string:
                in_string = None
        elif ch in ("'", '"'):
            in_string = ch
            current.append(ch)
        elif ch == ",":
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    if in_string:
        raise ConfigError(f"{source}:{line_no}: unterminated string in array")
    if current and "".join(current).strip():
        parts.append("".join(current))
    return parts


def _parse_scalar(raw: str, source: str, line_no: int) -> Any:
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in ("'", '"'):
        return raw[1:-1]
    if raw == "true":
        return True
    if raw == "false":
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    raise ConfigError(f"{source}:{line_no}: cannot parse value {raw!r}")
