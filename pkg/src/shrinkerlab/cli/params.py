"""Typed scenario parameters, coerced and checked before any computation."""

import math
from dataclasses import dataclass

from ..errors import ValidationError

REQUIRED = object()


@dataclass(frozen=True)
class Param:
    kind: str  # float, floats, int, ints, str, strs, bool
    default: object = None
    rule: str = ""  # positive, ascending (implies positive), nonempty
    help: str = ""

    @property
    def required(self):
        return self.default is REQUIRED


def _number(value, where, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}: expected a number, got {value!r}")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ValidationError(f"{where}: expected an integer, got {value!r}")
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{where}: must be finite")
    return value


def coerce(param, value, where):
    kind = param.kind
    if kind in ("float", "int"):
        out = _number(value, where, kind == "int")
        items = [out]
    elif kind in ("floats", "ints"):
        seq = value if isinstance(value, list) else [value]
        out = [_number(v, f"{where}[{i}]", kind == "ints") for i, v in enumerate(seq)]
        if not out:
            raise ValidationError(f"{where}: needs at least one value")
        items = out
    elif kind == "str":
        if not isinstance(value, str):
            raise ValidationError(f"{where}: expected a string, got {value!r}")
        return value
    elif kind == "strs":
        seq = value if isinstance(value, list) else [value]
        if not seq or not all(isinstance(v, str) for v in seq):
            raise ValidationError(f"{where}: expected a list of strings")
        return list(seq)
    elif kind == "bool":
        if not isinstance(value, bool):
            raise ValidationError(f"{where}: expected true or false, got {value!r}")
        return value
    else:
        raise AssertionError(kind)
    if "positive" in param.rule or "ascending" in param.rule:
        if any(v <= 0 for v in items):
            raise ValidationError(f"{where}: values must be positive")
    if "ascending" in param.rule and any(b <= a for a, b in zip(items, items[1:])):
        raise ValidationError(f"{where}: values must be strictly ascending")
    return out


def bind(schema, raw, where):
    """Coerce ``raw`` against ``schema``; unknown keys and missing required ones are errors."""
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ValidationError(f"{where}: unknown parameter(s) {', '.join(unknown)}; "
                              f"accepted: {', '.join(sorted(schema)) or 'none'}")
    out = {}
    for key, param in schema.items():
        if key in raw:
            out[key] = coerce(param, raw[key], f"{where}.{key}")
        elif param.required:
            raise ValidationError(f"{where}: missing required parameter {key!r}")
        else:
            out[key] = param.default
    return out
