"""Exact dyadic rationals and base-2 scaled floats.

Cube geometry in the strict construction reaches side lengths like
2**-819, so every coordinate is kept as ``numerator / 2**exponent`` with
Python integers, and bounds that leave the float range are carried as a
float mantissa times a power of two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering

__all__ = ["Dyadic", "ScaledFloat", "frac_log2_floor"]

_LN2 = math.log(2.0)


@total_ordering
@dataclass(frozen=True)
class Dyadic:
    """The number ``num / 2**exp`` in canonical form.

    Canonical means ``exp == 0`` or ``num`` odd, so equal values compare
    and hash equal as plain dataclasses.
    """

    num: int
    exp: int = 0

    def __post_init__(self):
        if self.exp < 0:
            raise ValueError("Dyadic exponent must be nonnegative")
        num, exp = self.num, self.exp
        if num == 0:
            exp = 0
        elif exp > 0 and num % 2 == 0:
            tz = (num & -num).bit_length() - 1
            shift = min(tz, exp)
            num >>= shift
            exp -= shift
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "exp", exp)

    @classmethod
    def pow2(cls, e: int) -> "Dyadic":
        """Return ``2**e`` for any integer ``e``."""
        return cls(1 << e, 0) if e >= 0 else cls(1, -e)

    @classmethod
    def coerce(cls, value) -> "Dyadic":
        if isinstance(value, Dyadic):
            return value
        if isinstance(value, int):
            return cls(value, 0)
        if isinstance(value, float):
            if not math.isfinite(value):
                raise ValueError("non-finite value is not dyadic")
            value = Fraction(value)
        if isinstance(value, Fraction):
            den = value.denominator
            if den & (den - 1):
                raise ValueError(f"{value} is not a dyadic rational")
            return cls(value.numerator, den.bit_length() - 1)
        if isinstance(value, str):
            return cls.parse(value)
        raise TypeError(f"cannot convert {type(value).__name__} to Dyadic")

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        """Parse ``"n"``, ``"n/2^e"`` or ``"n/d"`` with ``d`` a power of two."""
        text = text.strip()
        if "/2^" in text:
            n, e = text.split("/2^")
            return cls(int(n), int(e))
        return cls.coerce(Fraction(text))

    def __str__(self):
        return str(self.num) if self.exp == 0 else f"{self.num}/2^{self.exp}"

    def _aligned(self, other: "Dyadic"):
        if self.exp >= other.exp:
            return self.num, other.num << (self.exp - other.exp), self.exp
        return self.num << (other.exp - self.exp), other.num, other.exp

    def __add__(self, other):
        other = Dyadic.coerce(other)
        a, b, e = self._aligned(other)
        return Dyadic(a + b, e)

    __radd__ = __add__

    def __sub__(self, other):
        other = Dyadic.coerce(other)
        a, b, e = self._aligned(other)
        return Dyadic(a - b, e)

    def __rsub__(self, other):
        return Dyadic.coerce(other) - self

    def __mul__(self, other):
        other = Dyadic.coerce(other)
        return Dyadic(self.num * other.num, self.exp + other.exp)

    __rmul__ = __mul__

    def __neg__(self):
        return Dyadic(-self.num, self.exp)

    def __abs__(self):
        return Dyadic(abs(self.num), self.exp)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Dyadic)):
            other = Dyadic.coerce(other)
            return self.num == other.num and self.exp == other.exp
        return NotImplemented

    def __hash__(self):
        return hash((self.num, self.exp))

    def __lt__(self, other):
        other = Dyadic.coerce(other)
        a, b, _ = self._aligned(other)
        return a < b

    def scale2(self, e: int) -> "Dyadic":
        """Multiply by ``2**e``."""
        if e >= 0:
            shift = min(e, self.exp)
            return Dyadic(self.num << (e - shift), self.exp - shift)
        return Dyadic(self.num, self.exp - e)

    def floor(self) -> int:
        return self.num >> self.exp

    def ceil(self) -> int:
        return -((-self.num) >> self.exp)

    def sign(self) -> int:
        return (self.num > 0) - (self.num < 0)

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def __float__(self):
        if self.exp < 1000 and abs(self.num).bit_length() < 1000:
            return math.ldexp(float(self.num), -self.exp)
        return float(self.to_fraction())

    def log(self) -> float:
        """Natural logarithm of a positive dyadic, valid far outside float range."""
        if self.num <= 0:
            raise ValueError("log of a nonpositive dyadic")
        return math.log(self.num) - self.exp * _LN2


def frac_log2_floor(x: Fraction) -> int:
    """Return ``floor(log2(x))`` for a positive rational, exactly."""
    if x <= 0:
        raise ValueError("log2 of a nonpositive number")
    num, den = x.numerator, x.denominator
    e = num.bit_length() - den.bit_length()
    if e >= 0:
        if num < den << e:
            e -= 1
    elif num << -e < den:
        e -= 1
    return e


@total_ordering
class ScaledFloat:
    """A nonnegative value ``mantissa * 2**exponent`` with ``mantissa`` in [1, 2).

    Zero is stored as mantissa 0. Used for certified bounds whose binary
    exponent leaves the float range; rounding direction is chosen on
    construction so lower bounds stay lower bounds.
    """

    __slots__ = ("mantissa", "exponent")

    def __init__(self, mantissa: float, exponent: int = 0):
        if mantissa < 0 or not math.isfinite(mantissa):
            raise ValueError("ScaledFloat holds finite nonnegative values")
        if mantissa == 0:
            self.mantissa, self.exponent = 0.0, 0
            return
        m, e = math.frexp(mantissa)
        self.mantissa, self.exponent = m * 2.0, exponent + e - 1

    @classmethod
    def from_fraction(cls, x: Fraction, rounding: str = "down") -> "ScaledFloat":
        x = Fraction(x)
        if x < 0:
            raise ValueError("ScaledFloat holds nonnegative values")
        if x == 0:
            return cls(0.0)
        e = frac_log2_floor(x)
        scaled = x / 2**e if e >= 0 else x * 2**-e
        m = float(scaled)
        if rounding == "down" and Fraction(m) > scaled:
            m = math.nextafter(m, 0.0)
        elif rounding == "up" and Fraction(m) < scaled:
            m = math.nextafter(m, 4.0)
        return cls(m, e)

    @classmethod
    def pow2(cls, e: int) -> "ScaledFloat":
        return cls(1.0, e)

    def sqrt(self, rounding: str = "down") -> "ScaledFloat":
        if self.mantissa == 0:
            return ScaledFloat(0.0)
        m, e = self.mantissa, self.exponent
        if e % 2:
            m, e = m * 2.0, e - 1
        r = math.sqrt(m)
        r = math.nextafter(r, 0.0) if rounding == "down" else math.nextafter(r, 4.0)
        return ScaledFloat(r, e // 2)

    def log2(self) -> float:
        if self.mantissa == 0:
            return -math.inf
        return self.exponent + math.log2(self.mantissa)

    def __float__(self):
        if self.mantissa == 0:
            return 0.0
        if self.exponent > 1023:
            return math.inf
        return math.ldexp(self.mantissa, self.exponent)

    def __eq__(self, other):
        other = _as_scaled(other)
        return (self.mantissa, self.exponent) == (other.mantissa, other.exponent)

    def __lt__(self, other):
        other = _as_scaled(other)
        if self.mantissa == 0 or other.mantissa == 0:
            return self.mantissa < other.mantissa
        return (self.exponent, self.mantissa) < (other.exponent, other.mantissa)

    def __hash__(self):
        return hash((self.mantissa, self.exponent))

    def __repr__(self):
        return f"ScaledFloat({self.mantissa!r}, {self.exponent})"

    def __str__(self):
        if self.mantissa == 0:
            return "0"
        if abs(self.exponent) <= 900:
            return f"{float(self):.6g}"
        return f"{self.mantissa:.15g}*2^{self.exponent}"


def _as_scaled(x) -> ScaledFloat:
    if isinstance(x, ScaledFloat):
        return x
    if isinstance(x, (int, Fraction)):
        return ScaledFloat.from_fraction(Fraction(x), rounding="nearest")
    return ScaledFloat(float(x))
