"""Scalar literals shared by covector literals and experiment configs.

Integers and `p/q` parse to :class:`fractions.Fraction` and stay exact; decimals
and `sqrt:k` parse to floats. A float is how a config asserts irrationality.
"""
import math
import re
from fractions import Fraction
from typing import Union

Scalar = Union[Fraction, float]

_INTEGER = re.compile(r"^[+-]?\d+$")
_RATIONAL = re.compile(r"^([+-]?\d+)\s*/\s*(\d+)$")
_SQRT = re.compile(r"^([+-]?)sqrt:(\d+(?:\.\d+)?)$")


def parse_scalar(value: Union[str, int, float, Fraction]) -> Scalar:
    if isinstance(value, bool):
        raise ValueError(f"not a number: {value!r}")
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if isinstance(value, float):
        return value
    text = str(value).strip().replace("−", "-")
    if _INTEGER.match(text):
        return Fraction(int(text))
    match = _RATIONAL.match(text)
    if match:
        if int(match.group(2)) == 0:
            raise ValueError(f"zero denominator in {value!r}")
        return Fraction(int(match.group(1)), int(match.group(2)))
    match = _SQRT.match(text)
    if match:
        root = math.sqrt(float(match.group(2)))
        return -root if match.group(1) == "-" else root
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"not a number: {value!r}") from None


def is_exact(value: Scalar) -> bool:
    return isinstance(value, Fraction)


def format_scalar(value: Scalar) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return repr(float(value))
