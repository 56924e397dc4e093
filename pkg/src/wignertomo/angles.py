"""Exact parsing of angles written as rational multiples of pi."""

from __future__ import annotations

import math
import re
from fractions import Fraction

_PI_RE = re.compile(
    r"""^\s*(?P<sign>[+-]?)\s*
        (?P<num>\d+(?:\.\d*)?|\.\d+)?\s*\*?\s*
        (?P<pi>pi|π)\s*
        (?:/\s*(?P<den>\d+(?:\.\d*)?))?\s*$""",
    re.VERBOSE | re.IGNORECASE,
)


def angle_fraction(text: str) -> Fraction | None:
    """Return the multiple of pi as a fraction, or None for plain numbers."""
    m = _PI_RE.match(text)
    if not m:
        return None
    frac = Fraction(m.group("num") or "1")
    if m.group("den"):
        den = Fraction(m.group("den"))
        if den == 0:
            raise ValueError(f"zero denominator in angle {text!r}")
        frac /= den
    return -frac if m.group("sign") == "-" else frac


def parse_angle(text) -> float:
    """Parse ``"pi/12"``, ``"2pi"``, ``"-3pi/4"``, ``"3*pi/2"`` or a plain float (radians)."""
    if isinstance(text, (int, float)):
        return float(text)
    frac = angle_fraction(str(text))
    if frac is not None:
        return math.pi * frac.numerator / frac.denominator
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"cannot parse angle {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"angle must be finite, got {text!r}")
    return value


def format_angle(value: float, max_den: int = 24) -> str:
    """Inverse of :func:`parse_angle` for rational multiples of pi."""
    frac = Fraction(value / math.pi).limit_denominator(max_den)
    if abs(float(frac) * math.pi - value) > 1e-12:
        return repr(value)
    if frac == 0:
        return "0"
    num, den = frac.numerator, frac.denominator
    head = "-" if num < 0 else ""
    num = abs(num)
    body = "pi" if num == 1 else f"{num}pi"
    return head + body + (f"/{den}" if den != 1 else "")


def parse_angle_list(text: str) -> list[float]:
    """Comma list of angles, or a range ``start:stop:step`` with stop inclusive."""
    text = text.strip()
    if not text:
        return []
    if ":" in text and "," not in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:step, got {text!r}")
        fr = [angle_fraction(p) for p in parts]
        if all(f is not None for f in fr):
            start, stop, step = fr
            if step <= 0:
                raise ValueError("range step must be positive")
            count = int((stop - start) / step)
            return [math.pi * float(start + i * step) for i in range(count + 1)]
        start, stop, step = (parse_angle(p) for p in parts)
        if step <= 0:
            raise ValueError("range step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9))
        return [start + i * step for i in range(count + 1)]
    return [parse_angle(p) for p in text.split(",")]
