"""Flat ``section.key = value`` configuration files.

Vectors are comma separated. Matrices are rows separated by ``;``; a single
row given for a square-matrix key is read as its diagonal. ``#`` starts a
comment. Omitted keys take their defaults.
"""
from __future__ import annotations
import logging
import os
from dataclasses import fields
from typing import Any, Dict, Tuple

from domain.config import SECTIONS, ExperimentConfig, FieldError
from domain.errors import ConfigError
from ports.config_repository import ConfigRepository

logger = logging.getLogger(__name__)


def _number(text: str, kind: str, line: int) -> Any:
    try:
        return int(text) if kind == "int" else float(text)
    except ValueError:
        raise ConfigError(f"malformed number {text!r}", line) from None


def _vector(text: str, size: int, line: int) -> Tuple[float, ...]:
    values = tuple(_number(part.strip(), "float", line) for part in text.split(","))
    if len(values) != size:
        raise ConfigError(f"expected {size} values, got {len(values)}", line)
    return values


def _matrix(text: str, size: int, line: int) -> Tuple[Tuple[float, ...], ...]:
    rows = [row for row in text.split(";")]
    if len(rows) == 1:
        diag = _vector(rows[0], size, line)
        return tuple(tuple(diag[i] if i == j else 0.0 for j in range(size)) for i in range(size))
    if len(rows) != size:
        raise ConfigError(f"expected {size} matrix rows, got {len(rows)}", line)
    return tuple(_vector(row, size, line) for row in rows)


def _parse_value(text: str, meta: Dict[str, Any], line: int) -> Any:
    kind = meta["kind"]
    if kind in ("float", "int"):
        return _number(text, kind, line)
    if kind == "vector":
        return _vector(text, meta["size"], line)
    if kind == "matrix":
        return _matrix(text, meta["size"], line)
    return text.strip().strip('"')


def parse_config(text: str) -> ExperimentConfig:
    values: Dict[str, Dict[str, Any]] = {name: {} for name in SECTIONS}
    lines: Dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'section.key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        section, _, name = key.partition(".")
        if section not in SECTIONS:
            raise ConfigError(f"unknown section {section!r}", lineno)
        meta = {f.name: f.metadata for f in fields(SECTIONS[section])}
        if name not in meta:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in lines:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno)
        lines[key] = lineno
        values[section][name] = _parse_value(value, meta[name], lineno)

    sections = {}
    for section, section_type in SECTIONS.items():
        try:
            sections[section] = section_type(**values[section])
        except FieldError as exc:
            raise ConfigError(str(exc), lines.get(f"{section}.{exc.key}")) from exc
    return ExperimentConfig(**sections)


def _format_value(value: Any, meta: Dict[str, Any]) -> str:
    kind = meta["kind"]
    if kind == "float":
        return repr(float(value))
    if kind == "int":
        return str(int(value))
    if kind == "vector":
        return ", ".join(repr(float(v)) for v in value)
    if kind == "matrix":
        return "; ".join(", ".join(repr(float(v)) for v in row) for row in value)
    return str(value)


def serialize_config(config: ExperimentConfig) -> str:
    out = []
    for section in SECTIONS:
        out.append(f"# {section}")
        obj = getattr(config, section)
        for f in fields(obj):
            out.append(f"{section}.{f.name} = {_format_value(getattr(obj, f.name), f.metadata)}")
        out.append("")
    return "\n".join(out)


class KeyValueConfigAdapter(ConfigRepository):
    def __init__(self, path: str) -> None:
        self._path = path

    def load(self) -> ExperimentConfig:
        if not os.path.exists(self._path):
            logger.info("config %s not found, using defaults", self._path)
            return ExperimentConfig()
        try:
            with open(self._path, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {self._path}: {exc}") from exc
        try:
            return parse_config(text)
        except ConfigError as exc:
            raise ConfigError(f"{self._path}: {exc}") from exc

    def save(self, config: ExperimentConfig) -> None:
        try:
            with open(self._path, "w", encoding="utf-8") as f:
                f.write(serialize_config(config))
        except OSError as exc:
            raise ConfigError(f"cannot write config {self._path}: {exc}") from exc
