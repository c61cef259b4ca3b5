"""Exact rational scalar backend.

Every quantity in this package is an exact rational.  gmpy2's mpq is used
when available (it is several times faster than fractions.Fraction on the
pivot-heavy workloads); the stdlib Fraction is the fallback.  All code must
construct rationals through :func:`rat` so a single scalar type is used
consistently within a process.
"""

from __future__ import annotations

import math
import re

try:
    from gmpy2 import mpq as _mpq

    Rat = type(_mpq(1, 2))
    BACKEND = "gmpy2"

    def rat(num, den=None):
        if den is None:
            return _mpq(num)
        return _mpq(num, den)

except ImportError:  # pragma: no cover - exercised only without gmpy2
    from fractions import Fraction as _mpq

    Rat = _mpq
    BACKEND = "fractions"

    def rat(num, den=None):
        if den is None:
            return _mpq(num)
        return _mpq(num, den)


R0 = rat(0)
R1 = rat(1)

_RAT_RE = re.compile(r"^[+-]?\d+(/[1-9]\d*)?$")


class RationalParseError(ValueError):
    """A literal could not be read as an exact rational."""


def parse_rat(text) -> Rat:
    """Parse "p/q" or integer literals; reject decimals and floats.

    Decimal strings like "0.5" are refused on purpose: files are required
    to carry exact rationals, and silently converting binary or decimal
    floats would defeat the exactness guarantees downstream.
    """
    if isinstance(text, bool):
        raise RationalParseError(f"boolean is not a rational literal: {text!r}")
    if isinstance(text, int):
        return rat(text)
    if isinstance(text, float):
        raise RationalParseError(f"float literal rejected (exact rationals only): {text!r}")
    if isinstance(text, Rat):
        return text
    if not isinstance(text, str):
        raise RationalParseError(f"cannot read rational from {type(text).__name__}: {text!r}")
    s = text.strip()
    if not _RAT_RE.match(s):
        raise RationalParseError(f"not an exact rational literal: {text!r}")
    if "/" in s:
        p, q = s.split("/")
        return rat(int(p), int(q))
    return rat(int(s))


def rat_str(x) -> str:
    """Canonical "p/q" (or plain integer) string for a rational."""
    return str(x)


def approx_str(x, sig: int = 20) -> str:
    """Decimal approximation with `sig` significant digits, for display only."""
    num = int(x.numerator)
    den = int(x.denominator)
    if num == 0:
        return "0"
    sign = "-" if num < 0 else ""
    num = abs(num)
    # Exponent of the leading digit: floor(log10(num/den)).
    exp = len(str(num)) - len(str(den))
    if num * 10 ** max(0, -exp) < den * 10 ** max(0, exp):
        exp -= 1
    shift = sig - 1 - exp
    if shift >= 0:
        scaled = num * 10**shift
        digits, rem = divmod(scaled, den)
        if 2 * rem >= den:
            digits += 1
    else:
        digits, rem = divmod(num, den * 10**-shift)
        if 2 * rem >= den * 10**-shift:
            digits += 1
    ds = str(digits)
    if len(ds) > sig:  # rounding carried over, e.g. 999.. -> 1000..
        exp += 1
        ds = ds[:sig]
    point = exp + 1
    if 0 < point <= len(ds):
        text = ds[:point] + ("." + ds[point:] if point < len(ds) else "")
    elif point <= 0:
        text = "0." + "0" * (-point) + ds
    else:
        text = ds + "0" * (point - len(ds))
    return sign + text.rstrip(".") if "." in text else sign + text


def vec(values) -> tuple:
    """Tuple of rationals from an iterable of rational-like values."""
    return tuple(parse_rat(v) if not isinstance(v, Rat) else v for v in values)


def vec_str(v) -> list:
    return [rat_str(x) for x in v]


def dot(a, b) -> Rat:
    s = R0
    for x, y in zip(a, b):
        s += x * y
    return s


def vadd(a, b) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def vsub(a, b) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


def vscale(c, a) -> tuple:
    return tuple(c * x for x in a)


def is_zero_vec(a) -> bool:
    return all(x == 0 for x in a)


def canon_ray(v) -> tuple:
    """Primitive-integer representative of the ray through v.

    Denominators are cleared and the integer gcd divided out; the
    orientation of the vector is preserved (a ray and its negative are
    different objects).  Returns a tuple of rationals with integer values.
    """
    den_lcm = 1
    for x in v:
        den_lcm = den_lcm * int(x.denominator) // math.gcd(den_lcm, int(x.denominator))
    ints = [int(x.numerator) * (den_lcm // int(x.denominator)) for x in v]
    g = 0
    for n in ints:
        g = math.gcd(g, abs(n))
    if g == 0:
        return tuple(R0 for _ in v)
    return tuple(rat(n // g) for n in ints)


def canon_line(v) -> tuple:
    """Like canon_ray but sign-normalized (first nonzero entry positive).

    Used for lineality directions, where v and -v describe the same line.
    """
    c = canon_ray(v)
    for x in c:
        if x != 0:
            return c if x > 0 else tuple(-y for y in c)
    return c
