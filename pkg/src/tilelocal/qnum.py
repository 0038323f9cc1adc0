"""Exact rational scalars and vectors.

Everything geometric in this package (shifts, radii, moduli, corrections)
is computed over Q so that set comparisons of patches are exact.  We use
the stdlib Fraction throughout; this module only adds the thin layer we
need on top: strict string parsing for the JSON interchange format, a few
vector helpers, and integer floor/frac split.

A "vector" is a plain tuple of Fractions, one entry per axis.  We never
wrap it in a class: tuples hash, compare and unpack cleanly, and all the
call sites are happier for it.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction

Vec = tuple[Fraction, ...]

_RAT_RE = re.compile(r"^(-?\d+)(?:/(\d+))?$")


def parse_rational(text: str | int) -> Fraction:
    """Parse "p" or "p/q" into a Fraction.

    Only the two canonical forms are accepted (optional leading minus on
    the numerator, no whitespace, no floats).  Raises ValueError with the
    offending text otherwise, so callers can attach a JSON path.
    """
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"expected rational string, got {type(text).__name__}")
    m = _RAT_RE.match(text)
    if m is None:
        raise ValueError(f"malformed rational {text!r} (want 'p' or 'p/q')")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return Fraction(num, den)


def fmt_rational(q: Fraction) -> str:
    """Format a Fraction as "p" or "p/q" (lowest terms, den > 0)."""
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def parse_vec(obj, dim: int) -> Vec:
    if not isinstance(obj, (list, tuple)) or len(obj) != dim:
        raise ValueError(f"expected length-{dim} vector, got {obj!r}")
    return tuple(parse_rational(c) for c in obj)


def fmt_vec(v: Vec) -> list[str]:
    return [fmt_rational(c) for c in v]


def vec_add(a: Vec, b: Vec) -> Vec:
    return tuple(x + y for x, y in zip(a, b, strict=True))


def vec_sub(a: Vec, b: Vec) -> Vec:
    return tuple(x - y for x, y in zip(a, b, strict=True))


def vec_neg(a: Vec) -> Vec:
    return tuple(-x for x in a)


def vec_scale(t: Fraction, a: Vec) -> Vec:
    return tuple(t * x for x in a)


def zero_vec(dim: int) -> Vec:
    return (Fraction(0),) * dim


def vec_floor(a: Vec) -> tuple[int, ...]:
    return tuple(math.floor(x) for x in a)


def vec_frac(a: Vec) -> Vec:
    """Componentwise fractional part, in [0, 1)."""
    return tuple(x - math.floor(x) for x in a)


def vec_norm2(a: Vec) -> Fraction:
    """Squared Euclidean norm (exact)."""
    return sum((x * x for x in a), Fraction(0))


def norm_le(a: Vec, bound: Fraction) -> bool:
    """|a| <= bound, decided exactly via squares."""
    if bound < 0:
        return False
    return vec_norm2(a) <= bound * bound


def norm_lt(a: Vec, bound: Fraction) -> bool:
    if bound <= 0:
        return False
    return vec_norm2(a) < bound * bound


def sup_norm(a: Vec) -> Fraction:
    return max((abs(x) for x in a), default=Fraction(0))


def isqrt_exact(n: int) -> int | None:
    """Integer square root if n is a perfect square, else None."""
    if n < 0:
        return None
    r = math.isqrt(n)
    return r if r * r == n else None


def ceil_sqrt(q: Fraction) -> Fraction:
    """Rational upper bound on sqrt(q), exact when q is a perfect square."""
    if q < 0:
        raise ValueError("sqrt of a negative rational")
    n, d = q.numerator, q.denominator
    rn, rd = isqrt_exact(n), isqrt_exact(d)
    if rn is not None and rd is not None:
        return Fraction(rn, rd)
    # sqrt(n/d) = sqrt(n d)/d <= (floor(sqrt(n d)) + 1)/d
    return Fraction(math.isqrt(n * d) + 1, d)


def norm_upper(a: Vec) -> Fraction:
    """Rational upper bound on the Euclidean norm, exact when possible."""
    return ceil_sqrt(vec_norm2(a))
