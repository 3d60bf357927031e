# architectures/config_io.py
"""
Architecture documents: JSON Lines, one header object then one object per layer.

    {"format": "hetconv-arch", "version": 1, "name": "...", "input": [3, 32, 32], "layers": 2}
    {"name": "conv1", "kind": "standard_conv", "in_channels": 3, ...}
    {"name": "fc", "kind": "fc", ...}

Layer objects list only fields that differ from their defaults, in a fixed order, so
emit_arch is deterministic and parse_arch(emit_arch(a)) == a.
See docs/ARCH_FORMAT.md for the field table.
"""

import json
import logging
from dataclasses import fields
from typing import Any, Dict, List, Optional

from contracts.arch_spec_v1 import ARCH_FORMAT, ARCH_FORMAT_VERSION, ArchHeader, LayerRecord
from architectures.arch_spec import ArchSpec, ArchSpecError, LayerSpec
from utils.file_io import atomic_write_text

logger = logging.getLogger("ArchSpec")

_LAYER_DEFAULTS = {f.name: f.default for f in fields(LayerSpec)}
_FIELD_ORDER = [f.name for f in fields(LayerSpec)]
_INT_FIELDS = {"in_channels", "out_channels", "kernel", "stride", "padding", "part", "groups",
               "input_from", "residual_from"}
_STR_FIELDS = {"name", "kind", "pool", "block"}
_BOOL_FIELDS = {"bias"}
_HEADER_FIELDS = ("format", "version", "name", "input", "layers")


class ArchParseError(ArchSpecError):
    """Schema violation; `line` is 1-based, `field` names the offending key when known"""

    def __init__(self, message: str, line: int, field: Optional[str] = None):
        where = f"line {line}" + (f", field '{field}'" if field else "")
        super().__init__(f"{where}: {message}", field_name=field)
        self.line = line
        self.field = field


def emit_arch(a: ArchSpec) -> str:
    header: ArchHeader = {
        "format": ARCH_FORMAT,
        "version": ARCH_FORMAT_VERSION,
        "name": a.name,
        "input": list(a.input),
        "layers": len(a.layers),
    }
    lines = [json.dumps(header)]
    for layer in a.layers:
        record: LayerRecord = {"name": layer.name, "kind": layer.kind}
        for key in _FIELD_ORDER[2:]:
            value = getattr(layer, key)
            if value != _LAYER_DEFAULTS[key]:
                record[key] = value
        lines.append(json.dumps(record))
    return "\n".join(lines) + "\n"


def _load_line(text: str, lineno: int) -> Dict[str, Any]:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ArchParseError(f"invalid JSON ({e.msg})", lineno) from e
    if not isinstance(obj, dict):
        raise ArchParseError("expected a JSON object", lineno)
    return obj


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _parse_header(obj: Dict[str, Any]) -> Dict[str, Any]:
    for key in obj:
        if key not in _HEADER_FIELDS:
            raise ArchParseError(f"unknown header field '{key}'", 1, key)
    for key in _HEADER_FIELDS:
        if key not in obj:
            raise ArchParseError(f"missing header field '{key}'", 1, key)
    if obj["format"] != ARCH_FORMAT:
        raise ArchParseError(f"expected format '{ARCH_FORMAT}', got {obj['format']!r}", 1, "format")
    if obj["version"] != ARCH_FORMAT_VERSION:
        raise ArchParseError(f"unsupported version {obj['version']!r}", 1, "version")
    if not isinstance(obj["name"], str) or not obj["name"]:
        raise ArchParseError("name must be a non-empty string", 1, "name")
    shape = obj["input"]
    if not (isinstance(shape, list) and len(shape) == 3 and all(_is_int(v) and v >= 1 for v in shape)):
        raise ArchParseError("input must be [channels, height, width] of positive integers", 1, "input")
    if not _is_int(obj["layers"]) or obj["layers"] < 0:
        raise ArchParseError("layers must be a non-negative integer", 1, "layers")
    return obj


def _parse_layer(obj: Dict[str, Any], lineno: int) -> LayerSpec:
    for key in ("name", "kind"):
        if key not in obj:
            raise ArchParseError(f"missing field '{key}'", lineno, key)
    kwargs = {}
    for key, value in obj.items():
        if key not in _LAYER_DEFAULTS:
            raise ArchParseError(f"unknown field '{key}'", lineno, key)
        if key in _INT_FIELDS and not _is_int(value):
            raise ArchParseError(f"expected an integer, got {value!r}", lineno, key)
        if key in _STR_FIELDS and not isinstance(value, str):
            raise ArchParseError(f"expected a string, got {value!r}", lineno, key)
        if key in _BOOL_FIELDS and not isinstance(value, bool):
            raise ArchParseError(f"expected a boolean, got {value!r}", lineno, key)
        kwargs[key] = value
    try:
        return LayerSpec(**kwargs)
    except ArchSpecError as e:
        raise ArchParseError(str(e), lineno, e.field_name) from e


def parse_arch(text: str) -> ArchSpec:
    """
    Parse an architecture document.

    Raises:
        ArchParseError: with the 1-based line and field of the first violation, including
            kind-specific and chaining checks (e.g. a hetconv P that does not divide M)
    """
    numbered = [(i, line) for i, line in enumerate(text.splitlines(), start=1) if line.strip()]
    if not numbered:
        raise ArchParseError("empty document", 1)
    first_line, first = numbered[0]
    if first_line != 1:
        raise ArchParseError("header must be the first line", first_line)
    header = _parse_header(_load_line(first, 1))

    records = numbered[1:]
    if len(records) != header["layers"]:
        raise ArchParseError(
            f"header declares {header['layers']} layers, found {len(records)}", 1, "layers")

    layers: List[LayerSpec] = []
    line_of: List[int] = []
    for lineno, line in records:
        layers.append(_parse_layer(_load_line(line, lineno), lineno))
        line_of.append(lineno)

    try:
        spec = ArchSpec(header["name"], tuple(header["input"]), tuple(layers))
    except ArchSpecError as e:
        line = line_of[e.index] if e.index is not None and e.index < len(line_of) else 1
        raise ArchParseError(str(e), line, e.field_name) from e
    logger.debug(f"Parsed {spec.name}: {len(spec.layers)} layers")
    return spec


def load_arch(path: str) -> ArchSpec:
    with open(path, "r", encoding="utf-8") as f:
        return parse_arch(f.read())


def save_arch(a: ArchSpec, path: str) -> None:
    atomic_write_text(path, emit_arch(a))
    logger.info(f"Saved {a.name} to {path}")
