"""Signed scalars stored in the base-2 log domain.

A value is a sign together with the base-2 logarithm of its magnitude, so
products are exponent additions and magnitudes like 2^(-30000), which underflow
native doubles, stay representable.  Sums go through log-sum-exp and never
overflow for exponents up to about 1e6 in absolute value.  Conversion to a
native float is exact to a few ulps whenever the exponent is inside the
double range.

Values are immutable; every operation is a pure function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

_LN2 = math.log(2.0)
_LOG2E = 1.0 / _LN2

# Doubles span roughly 2^-1074 (subnormal) .. 2^1024; conversions outside this
# band saturate to signed zero / infinity rather than raising.
_FLOAT_MAX_LOG2 = 1024.0
_FLOAT_MIN_LOG2 = -1074.0


@dataclass(frozen=True)
class Tolerance:
    """Comparison slack.

    ``rel`` is a relative tolerance on values (used by iterative solvers),
    ``abs_log2`` is an absolute slack on base-2 exponents (used by ordering
    comparisons).  There is deliberately no global default epsilon; call sites
    pass the tolerance they mean.
    """

    rel: float
    abs_log2: float = 0.0

    def __post_init__(self) -> None:
        if not self.rel > 0.0:
            raise ValueError(f"rel tolerance must be positive, got {self.rel}")
        if self.abs_log2 < 0.0:
            raise ValueError(f"abs_log2 slack must be >= 0, got {self.abs_log2}")


def log2_add(a: float, b: float) -> float:
    """log2(2^a + 2^b) for plain floats, tolerant of -inf."""
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp((lo - hi) * _LN2)) * _LOG2E


def log2_sub(a: float, b: float) -> float:
    """log2(2^a - 2^b) for a >= b; returns -inf on exact cancellation."""
    if b == -math.inf:
        return a
    if a < b:
        raise ValueError(f"log2_sub needs a >= b, got a={a} b={b}")
    if a == b:
        return -math.inf
    d = b - a  # < 0
    return a + math.log1p(-math.exp(d * _LN2)) * _LOG2E


@dataclass(frozen=True)
class LogReal:
    """A real number as (sign, log2 of magnitude)."""

    sign: int
    log2mag: float

    def __post_init__(self) -> None:
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign}")
        if self.sign == 0:
            object.__setattr__(self, "log2mag", 0.0)
        elif math.isnan(self.log2mag) or self.log2mag == math.inf:
            raise ValueError(f"log2mag must be finite or -inf, got {self.log2mag}")
        elif self.log2mag == -math.inf:
            # an underflowed magnitude is zero
            object.__setattr__(self, "sign", 0)
            object.__setattr__(self, "log2mag", 0.0)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero() -> "LogReal":
        return _ZERO

    @staticmethod
    def one() -> "LogReal":
        return _ONE

    @staticmethod
    def from_float(x: float) -> "LogReal":
        if math.isnan(x) or math.isinf(x):
            raise ValueError(f"cannot represent {x}")
        if x == 0.0:
            return _ZERO
        return LogReal(1 if x > 0 else -1, math.log2(abs(x)))

    @staticmethod
    def from_log2(log2mag: float, sign: int = 1) -> "LogReal":
        return LogReal(sign, log2mag)

    @staticmethod
    def two_pow(exponent: float) -> "LogReal":
        """Exact 2^exponent."""
        return LogReal(1, float(exponent))

    # -- predicates --------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    # -- arithmetic --------------------------------------------------------

    def __neg__(self) -> "LogReal":
        return LogReal(-self.sign, self.log2mag)

    def __abs__(self) -> "LogReal":
        return LogReal(abs(self.sign), self.log2mag)

    def __mul__(self, other: "LogReal") -> "LogReal":
        s = self.sign * other.sign
        if s == 0:
            return _ZERO
        return LogReal(s, self.log2mag + other.log2mag)

    def __truediv__(self, other: "LogReal") -> "LogReal":
        if other.sign == 0:
            raise ZeroDivisionError("LogReal division by zero")
        s = self.sign * other.sign
        if s == 0:
            return _ZERO
        return LogReal(s, self.log2mag - other.log2mag)

    def __add__(self, other: "LogReal") -> "LogReal":
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        a, b = self.log2mag, other.log2mag
        if self.sign == other.sign:
            return LogReal(self.sign, log2_add(a, b))
        if a == b:
            return _ZERO
        if a > b:
            return LogReal(self.sign, log2_sub(a, b))
        return LogReal(other.sign, log2_sub(b, a))

    def __sub__(self, other: "LogReal") -> "LogReal":
        return self + (-other)

    def scale_pow2(self, exponent: float) -> "LogReal":
        """Multiply by 2^exponent; exact shift of the stored exponent."""
        if self.sign == 0:
            return _ZERO
        return LogReal(self.sign, self.log2mag + exponent)

    # -- ordering ----------------------------------------------------------

    def _cmp(self, other: "LogReal", abs_log2: float) -> int:
        if self.sign != other.sign:
            return -1 if self.sign < other.sign else 1
        if self.sign == 0:
            return 0
        d = self.log2mag - other.log2mag
        if abs(d) <= abs_log2:
            return 0
        s = 1 if d > 0 else -1
        return s if self.sign > 0 else -s

    def cmp(self, other: "LogReal", tol: Tolerance) -> int:
        """-1, 0 or +1; exponents within tol.abs_log2 compare equal."""
        return self._cmp(other, tol.abs_log2)

    def __lt__(self, other: "LogReal") -> bool:
        return self._cmp(other, 0.0) < 0

    def __le__(self, other: "LogReal") -> bool:
        return self._cmp(other, 0.0) <= 0

    def __gt__(self, other: "LogReal") -> bool:
        return self._cmp(other, 0.0) > 0

    def __ge__(self, other: "LogReal") -> bool:
        return self._cmp(other, 0.0) >= 0

    # -- conversion & rendering --------------------------------------------

    def to_float(self) -> float:
        """Nearest native double; saturates outside the double range."""
        if self.sign == 0:
            return 0.0
        if self.log2mag >= _FLOAT_MAX_LOG2:
            return math.inf if self.sign > 0 else -math.inf
        if self.log2mag < _FLOAT_MIN_LOG2:
            return 0.0 if self.sign > 0 else -0.0
        return self.sign * 2.0 ** self.log2mag

    def render(self) -> str:
        """Decimal when the value fits a double comfortably, else '±2^e'."""
        if self.sign == 0:
            return "0"
        if -900.0 < self.log2mag < 900.0:
            return repr(self.to_float())
        prefix = "" if self.sign > 0 else "-"
        return f"{prefix}2^{self.log2mag!r}"

    def __str__(self) -> str:
        return self.render()

    @staticmethod
    def parse(text: str) -> "LogReal":
        """Inverse of render(); accepts decimals and the '±2^e' form."""
        s = text.strip()
        if not s:
            raise ValueError("empty LogReal token")
        sign = 1
        if s[0] in "+-":
            if s[0] == "-":
                sign = -1
            s = s[1:]
        if s.startswith("2^"):
            return LogReal(sign, float(s[2:]))
        x = float(s)
        if x == 0.0:
            return _ZERO
        if x < 0.0:
            sign, x = -sign, -x
        return LogReal(sign, math.log2(x))


_ZERO = LogReal(0, 0.0)
_ONE = LogReal(1, 0.0)

ZERO = _ZERO
ONE = _ONE


def log_add(a: LogReal, b: LogReal) -> LogReal:
    """Sum of two log-domain values; commutative, exact when one is zero."""
    return a + b


def log_sum(values: Iterable[LogReal]) -> LogReal:
    total = _ZERO
    for v in values:
        total = total + v
    return total


def log_cmp(a: LogReal, b: LogReal, tol: Tolerance) -> int:
    """Total order on reconstructed values: -1, 0 (within slack) or +1."""
    return a.cmp(b, tol)
