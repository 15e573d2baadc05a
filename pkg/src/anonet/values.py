"""Input values: exact rationals for numeric inputs, plain strings for tokens."""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Any, Union

Value = Union[Fraction, str]

_RATIONAL = re.compile(r"^\s*-?\d+(\s*/\s*\d+)?\s*$")


def value_key(v: Any) -> tuple:
    """Total order on values: numbers before tokens, tuples lexicographic."""
    if isinstance(v, bool):
        return (0, Fraction(int(v)))
    if isinstance(v, (int, Fraction)):
        return (0, Fraction(v))
    if isinstance(v, float):
        return (0, Fraction(v))
    if isinstance(v, str):
        return (1, v)
    if isinstance(v, tuple):
        return (2, tuple(value_key(x) for x in v))
    if v is None:
        return (-1,)
    raise TypeError(f"unorderable value {v!r}")


def parse_value(raw: Any) -> Value:
    """JSON scalar to a Value. Numbers and "p/q" strings become rationals."""
    if isinstance(raw, bool):
        raise ValueError("booleans are not values")
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, float):
        return Fraction(raw).limit_denominator(10**12)
    if isinstance(raw, str):
        if _RATIONAL.match(raw):
            return Fraction(raw.replace(" ", ""))
        return raw
    if isinstance(raw, Fraction):
        return raw
    raise ValueError(f"cannot parse value {raw!r}")


def format_value(v: Any) -> Any:
    """Value to a JSON-friendly scalar; rationals become exact strings."""
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, tuple):
        return [format_value(x) for x in v]
    if isinstance(v, dict):
        return {str(format_value(k)): format_value(x) for k, x in v.items()}
    if isinstance(v, (frozenset, set)):
        return [format_value(x) for x in sorted(v, key=value_key)]
    return v
