"""YAML scenario files: parsing with line-precise validation, and serialization.

Every key is optional and falls back to the default of the matching config
field. Unknown keys, wrong types and violated constraints are reported with
the dotted field path and the line number in the source document.
"""

from __future__ import annotations

import dataclasses
import re
import types
import typing
from enum import Enum
from pathlib import Path
from typing import Any

import yaml

from .config import ConfigError, ScenarioConfig

_Path = tuple


def _line_map(node: yaml.Node | None, path: _Path = (), out: dict | None = None) -> dict:
    out = {} if out is None else out
    if node is None:
        return out
    out.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            key = key_node.value
            out[path + (key,)] = key_node.start_mark.line + 1
            _line_map(value_node, path + (key,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            _line_map(item, path + (i,), out)
    return out


class _Builder:
    def __init__(self, lines: dict) -> None:
        self.lines = lines

    def error(self, path: _Path, message: str) -> ConfigError:
        where = ".".join(str(p) for p in path) or "<document>"
        line = None
        for cut in range(len(path), -1, -1):
            line = self.lines.get(path[:cut])
            if line is not None:
                break
        prefix = f"line {line}: " if line is not None else ""
        return ConfigError(f"{prefix}{where}: {message}")

    def build(self, tp: Any, value: Any, path: _Path) -> Any:
        origin = typing.get_origin(tp)
        args = typing.get_args(tp)

        if origin in (typing.Union, types.UnionType):
            if value is None and type(None) in args:
                return None
            inner = [a for a in args if a is not type(None)]
            return self.build(inner[0], value, path)
        if dataclasses.is_dataclass(tp):
            return self.build_dataclass(tp, value, path)
        if isinstance(tp, type) and issubclass(tp, Enum):
            try:
                return tp(value)
            except ValueError:
                choices = ", ".join(str(m.value) for m in tp)
                raise self.error(path, f"expected one of {choices}, got {value!r}") from None
        if origin is tuple:
            if not isinstance(value, (list, tuple)):
                raise self.error(path, f"expected a list, got {type(value).__name__}")
            if len(args) == 2 and args[1] is Ellipsis:
                return tuple(self.build(args[0], v, path + (i,)) for i, v in enumerate(value))
            if len(value) != len(args):
                raise self.error(path, f"expected a list of {len(args)} items, got {len(value)}")
            return tuple(self.build(a, v, path + (i,)) for i, (a, v) in enumerate(zip(args, value)))
        if tp is bool:
            if not isinstance(value, bool):
                raise self.error(path, f"expected true/false, got {value!r}")
            return value
        if tp is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise self.error(path, f"expected an integer, got {value!r}")
            return value
        if tp is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise self.error(path, f"expected a number, got {value!r}")
            return float(value)
        if tp is str:
            if not isinstance(value, str):
                raise self.error(path, f"expected a string, got {value!r}")
            return value
        raise TypeError(f"unsupported config type {tp!r}")

    def build_dataclass(self, cls: type, value: Any, path: _Path) -> Any:
        if value is None:
            value = {}
        if not isinstance(value, dict):
            raise self.error(path, f"expected a mapping, got {type(value).__name__}")
        hints = typing.get_type_hints(cls)
        known = {f.name for f in dataclasses.fields(cls) if f.init}
        for key in value:
            if key not in known:
                raise self.error(path + (key,), f"unknown key (allowed: {', '.join(sorted(known))})")
        kwargs = {name: self.build(hints[name], value[name], path + (name,))
                  for name in known if name in value}
        try:
            return cls(**kwargs)
        except (ValueError, TypeError) as exc:
            # point at the key the message names first, if the document has it
            message = str(exc)
            hits = [(m.start(), k) for k in value if (m := re.search(rf"\b{re.escape(str(k))}\b", message))]
            at = path + (min(hits)[1],) if hits else path
            raise self.error(at, message) from None


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and validate a YAML scenario document."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        raise ConfigError(f"{where}malformed YAML: {getattr(exc, 'problem', exc)}") from None
    return _Builder(_line_map(node)).build_dataclass(ScenarioConfig, data, ())


def load_scenario(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {p}: {exc.strerror}") from None
    try:
        return parse_scenario(text)
    except ConfigError as exc:
        raise ConfigError(f"{p}: {exc}") from None


def _plain(value: Any) -> Any:
    if dataclasses.is_dataclass(value):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def serialize_scenario(config: ScenarioConfig) -> str:
    return yaml.safe_dump(_plain(config), sort_keys=False, default_flow_style=None)
