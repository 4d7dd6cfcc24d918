"""Exact-rational parsing and formatting helpers.

All quantities in this package are Fractions; floats only appear in
display strings. Config files may write numbers as "p/q", as decimal
strings, or as plain ints, and every form parses exactly.
"""
from __future__ import annotations

from fractions import Fraction
from math import isqrt


def parse_rational(text) -> Fraction:
    """Parse "p/q", a decimal string, or an int into an exact Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        # Floats in hand-written configs are decimal literals; recover the
        # intended decimal value instead of the binary expansion.
        return Fraction(str(text))
    if isinstance(text, str):
        return Fraction(text.strip())
    raise ValueError(f"not a rational value: {text!r}")


def format_rational(value: Fraction) -> str:
    """Render as reduced p/q plus a 12-significant-digit decimal."""
    value = Fraction(value)
    return f"{value} ({float(value):.12g})"


def sqrt_fraction(value: Fraction) -> Fraction:
    """Square root of a nonnegative rational as a Fraction.

    Exact when the input is a perfect rational square, otherwise accurate
    to roughly 1e-22 relative error (far tighter than any tolerance used
    by callers).
    """
    value = Fraction(value)
    if value < 0:
        raise ValueError("square root of a negative rational")
    if value == 0:
        return Fraction(0)
    p, q = value.numerator, value.denominator
    root = isqrt(p * q)
    if root * root == p * q:
        return Fraction(root, q)
    scale = 10**22
    return Fraction(isqrt(p * q * scale * scale), q * scale)
