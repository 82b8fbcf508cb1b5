"""Scalar helpers shared by the exact (Fraction) and floating paths."""
import math
import numbers
from fractions import Fraction

from .errors import InvalidInputError

REL_TOL = 1e-9
ABS_TOL = 1e-12


def is_exact(x):
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def all_exact(values):
    return all(is_exact(v) for v in values)


def to_scalar(x):
    """Normalize an input number: ints and rationals become Fraction, reals become float."""
    if isinstance(x, bool):
        raise InvalidInputError(f"boolean is not a number: {x!r}")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, numbers.Integral):
        return Fraction(int(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInputError(f"cannot parse number {x!r}") from exc
    if isinstance(x, numbers.Real):
        v = float(x)
        if not math.isfinite(v):
            raise InvalidInputError(f"non-finite number {x!r}")
        return v
    raise InvalidInputError(f"not a real number: {x!r}")


def sign(x):
    return (x > 0) - (x < 0)


def exact_sqrt(x):
    """Square root that stays a Fraction when x is a rational perfect square."""
    if x < 0:
        raise ValueError("negative argument")
    if is_exact(x):
        x = Fraction(x)
        rn, rd = math.isqrt(x.numerator), math.isqrt(x.denominator)
        if rn * rn == x.numerator and rd * rd == x.denominator:
            return Fraction(rn, rd)
    return math.sqrt(x)


def close(x, y, scale=0.0, rel=REL_TOL, abs_tol=ABS_TOL):
    if is_exact(x) and is_exact(y):
        return x == y
    return abs(x - y) <= max(abs_tol, rel * max(abs(scale), abs(x), abs(y)))


def fmt(x):
    """String for display; fractions stay exact."""
    if is_exact(x):
        return str(Fraction(x))
    return format(float(x), ".17g")
