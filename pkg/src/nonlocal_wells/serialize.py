"""JSON/CSV output with fixed 17-significant-digit floats and shipped schemas."""

from __future__ import annotations

import csv
import io
import json
import math
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

FLOAT_DIGITS = 17


class Digits:
    """A float written with a chosen number of significant digits."""

    def __init__(self, value: float, sig: int):
        self.value = float(value)
        self.sig = sig

    def __str__(self):
        return format_float(self.value, self.sig)


def format_float(x: float, sig: int = FLOAT_DIGITS) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialise non-finite float {x!r}")
    text = format(x + 0.0, f".{sig}g")
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," + pad if indent else ", "
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, Digits):
        return str(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = (json.dumps(str(k)) + ": " + _encode(v, indent, level + 1) for k, v in obj.items())
        return "{" + pad + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if not any(isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, 0, 0) for v in obj) + "]"
        return "[" + pad + sep.join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON: insertion-ordered keys, floats at 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def plain(obj):
    """Round-trip through the text form, giving plain Python values (for validation)."""
    return json.loads(dumps(obj, indent=0))


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([str(v) if isinstance(v, Digits) else format_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("nonlocal_wells").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(name: str, obj) -> None:
    jsonschema.validate(plain(obj), load_schema(name))
