"""Exact scalar arithmetic for skeleton computations.

Two small exact number types are used throughout the package:

* ``LogRVal`` represents a + b*L + c/L where L = log(r) for the base radius
  r in (0,1) and a, b, c are rationals.  Valuation-side quantities are
  rational multiples of log(r); dividing out log(r) introduces 1/log(r),
  and both must coexist in one value when tropical constants meet
  valuations.  Since log(r) is transcendental for rational r != 1, the
  representation is canonical: equality is structural.
* ``PrimeLogVal`` represents q0 + sum_p q_p*log(p) over finitely many
  primes.  Logarithms of distinct primes are linearly independent over Q
  (unique factorization), so equality is again structural.

Order comparisons cannot be structural; they are certified numerically
with mpmath interval arithmetic at increasing precision.  A nonzero value
is bounded away from zero, so the refinement terminates.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

import mpmath

Rat = Union[int, Fraction]

_PRECISIONS = (80, 160, 320, 640, 1280, 2560)


class PrecisionError(ArithmeticError):
    """Interval refinement failed to separate a value from zero."""


def _certified_sign(make_interval) -> int:
    """Sign of a provably nonzero quantity via interval refinement.

    ``make_interval`` receives an ``mpmath.iv`` context and returns an
    interval enclosing the quantity.
    """
    for prec in _PRECISIONS:
        ctx = mpmath.iv
        old = ctx.prec
        try:
            ctx.prec = prec
            val = make_interval(ctx)
            if val > 0:
                return 1
            if val < 0:
                return -1
        finally:
            ctx.prec = old
    raise PrecisionError("interval refinement exhausted; value too close to zero")


_LOG_CACHE: dict = {}


def _float_log(q: Fraction) -> float:
    val = _LOG_CACHE.get(q)
    if val is None:
        val = float(mpmath.log(mpmath.mpf(q.numerator) / mpmath.mpf(q.denominator)))
        _LOG_CACHE[q] = val
    return val


def as_fraction(x: Rat) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected rational, got {type(x).__name__}")


class LogRVal:
    """Exact element a + b*log(r) + c/log(r), with rational a, b, c.

    Products are supported only when the result stays in this span, i.e.
    when no log(r)^2 or 1/log(r)^2 term would appear.  That covers every
    product the package needs (rational slopes times mixed offsets,
    symbolic values times rational masses).
    """

    __slots__ = ("a", "b", "c")

    def __init__(self, const: Rat = 0, logr: Rat = 0, invlogr: Rat = 0):
        self.a = as_fraction(const)
        self.b = as_fraction(logr)
        self.c = as_fraction(invlogr)

    # -- constructors -------------------------------------------------
    @classmethod
    def of(cls, x) -> "LogRVal":
        if isinstance(x, LogRVal):
            return x
        return cls(const=as_fraction(x))

    @classmethod
    def logr(cls, coeff: Rat = 1) -> "LogRVal":
        return cls(logr=coeff)

    @classmethod
    def invlogr(cls, coeff: Rat = 1) -> "LogRVal":
        return cls(invlogr=coeff)

    # -- ring-ish operations ------------------------------------------
    def __add__(self, other) -> "LogRVal":
        o = LogRVal.of(other)
        return LogRVal(self.a + o.a, self.b + o.b, self.c + o.c)

    __radd__ = __add__

    def __neg__(self) -> "LogRVal":
        return LogRVal(-self.a, -self.b, -self.c)

    def __sub__(self, other) -> "LogRVal":
        return self + (-LogRVal.of(other))

    def __rsub__(self, other) -> "LogRVal":
        return LogRVal.of(other) + (-self)

    def __mul__(self, other) -> "LogRVal":
        o = LogRVal.of(other)
        if self.b * o.b != 0 or self.c * o.c != 0:
            raise ArithmeticError("product leaves the span {1, log r, 1/log r}")
        # (a1 + b1 L + c1/L)(a2 + b2 L + c2/L) with b1*b2 = c1*c2 = 0;
        # the cross terms b*c collapse to constants since L * (1/L) = 1.
        const = self.a * o.a + self.b * o.c + self.c * o.b
        logr = self.a * o.b + self.b * o.a
        inv = self.a * o.c + self.c * o.a
        return LogRVal(const, logr, inv)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogRVal":
        if isinstance(other, LogRVal):
            if other.b == 0 and other.c == 0:
                return self * Fraction(1, 1) / other.a
            if other.a == 0 and other.c == 0 and self.c == 0:
                # (a + bL)/ (b2 L) = b/b2 + (a/b2)/L
                return LogRVal(self.b / other.b, 0, self.a / other.b)
            raise ArithmeticError("division leaves the span")
        q = as_fraction(other)
        return LogRVal(self.a / q, self.b / q, self.c / q)

    def __eq__(self, other) -> bool:
        o = LogRVal.of(other)
        return self.a == o.a and self.b == o.b and self.c == o.c

    def __hash__(self):
        return hash((self.a, self.b, self.c))

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0 and self.c == 0

    def is_rational(self) -> bool:
        return self.b == 0 and self.c == 0

    def rational_part(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("value has a transcendental part")
        return self.a

    # -- order (needs the radius) --------------------------------------
    def sign(self, r: Fraction) -> int:
        if self.is_zero():
            return 0
        if self.b == 0 and self.c == 0:
            return 1 if self.a > 0 else -1
        a, b, c = self.a, self.b, self.c

        def interval(ctx):
            L = ctx.log(ctx.mpf(r.numerator) / ctx.mpf(r.denominator))
            return (
                ctx.mpf(a.numerator) / a.denominator
                + (ctx.mpf(b.numerator) / b.denominator) * L
                + (ctx.mpf(c.numerator) / c.denominator) / L
            )

        return _certified_sign(interval)

    def cmp(self, other, r: Fraction) -> int:
        return (self - other).sign(r)

    def to_float(self, r: Fraction) -> float:
        L = _float_log(r)
        return float(self.a) + float(self.b) * L + float(self.c) / L

    def __repr__(self):
        parts = []
        if self.a:
            parts.append(str(self.a))
        if self.b:
            parts.append(f"({self.b})*logr")
        if self.c:
            parts.append(f"({self.c})/logr")
        return " + ".join(parts) if parts else "0"

    def to_json(self):
        return {"const": str(self.a), "logr": str(self.b), "invlogr": str(self.c)}


def logr_max(values: Iterable[LogRVal], r: Fraction) -> LogRVal:
    vals = list(values)
    if not vals:
        raise ValueError("max of empty collection")
    best = vals[0]
    for v in vals[1:]:
        if v.cmp(best, r) > 0:
            best = v
    return best


def logr_min(values: Iterable[LogRVal], r: Fraction) -> LogRVal:
    vals = list(values)
    if not vals:
        raise ValueError("min of empty collection")
    best = vals[0]
    for v in vals[1:]:
        if v.cmp(best, r) < 0:
            best = v
    return best


class PrimeLogVal:
    """Exact element q0 + sum_p q_p * log(p), p prime, q rational."""

    __slots__ = ("const", "logs")

    def __init__(self, const: Rat = 0, logs: dict | None = None):
        self.const = as_fraction(const)
        clean = {}
        if logs:
            for p, q in logs.items():
                qf = as_fraction(q)
                if qf != 0:
                    clean[int(p)] = qf
        self.logs = clean

    @classmethod
    def of(cls, x) -> "PrimeLogVal":
        if isinstance(x, PrimeLogVal):
            return x
        return cls(const=as_fraction(x))

    @classmethod
    def log_of_int(cls, n: int) -> "PrimeLogVal":
        """log|n| of a nonzero integer, in the prime-log basis."""
        if n == 0:
            raise ValueError("log of zero")
        n = abs(n)
        logs: dict[int, Fraction] = {}
        p = 2
        while p * p <= n:
            while n % p == 0:
                logs[p] = logs.get(p, Fraction(0)) + 1
                n //= p
            p += 1
        if n > 1:
            logs[n] = logs.get(n, Fraction(0)) + 1
        return cls(0, logs)

    @classmethod
    def log_of_fraction(cls, q: Fraction) -> "PrimeLogVal":
        if q <= 0:
            raise ValueError("log of non-positive rational")
        return cls.log_of_int(q.numerator) - cls.log_of_int(q.denominator)

    def __add__(self, other) -> "PrimeLogVal":
        o = PrimeLogVal.of(other)
        logs = dict(self.logs)
        for p, q in o.logs.items():
            logs[p] = logs.get(p, Fraction(0)) + q
        return PrimeLogVal(self.const + o.const, logs)

    __radd__ = __add__

    def __neg__(self) -> "PrimeLogVal":
        return PrimeLogVal(-self.const, {p: -q for p, q in self.logs.items()})

    def __sub__(self, other) -> "PrimeLogVal":
        return self + (-PrimeLogVal.of(other))

    def __rsub__(self, other) -> "PrimeLogVal":
        return PrimeLogVal.of(other) + (-self)

    def __mul__(self, scalar) -> "PrimeLogVal":
        q = as_fraction(scalar)
        return PrimeLogVal(self.const * q, {p: c * q for p, c in self.logs.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "PrimeLogVal":
        return self * (Fraction(1) / as_fraction(scalar))

    def __eq__(self, other) -> bool:
        o = PrimeLogVal.of(other)
        return self.const == o.const and self.logs == o.logs

    def __hash__(self):
        return hash((self.const, tuple(sorted(self.logs.items()))))

    def is_zero(self) -> bool:
        return self.const == 0 and not self.logs

    def sign(self) -> int:
        if self.is_zero():
            return 0
        if not self.logs:
            return 1 if self.const > 0 else -1
        const, logs = self.const, self.logs

        def interval(ctx):
            acc = ctx.mpf(const.numerator) / const.denominator
            for p, q in logs.items():
                acc += (ctx.mpf(q.numerator) / q.denominator) * ctx.log(ctx.mpf(p))
            return acc

        return _certified_sign(interval)

    def cmp(self, other) -> int:
        return (self - other).sign()

    def to_float(self) -> float:
        acc = float(self.const)
        for p, q in self.logs.items():
            acc += float(q) * float(mpmath.log(p))
        return acc

    def __repr__(self):
        parts = [str(self.const)] if self.const else []
        for p in sorted(self.logs):
            parts.append(f"({self.logs[p]})*log{p}")
        return " + ".join(parts) if parts else "0"

    def to_json(self):
        return {
            "const": str(self.const),
            "logs": {str(p): str(q) for p, q in sorted(self.logs.items())},
        }


def primelog_max(values: Iterable[PrimeLogVal]) -> PrimeLogVal:
    vals = list(values)
    if not vals:
        raise ValueError("max of empty collection")
    best = vals[0]
    for v in vals[1:]:
        if v.cmp(best) > 0:
            best = v
    return best


def rat_to_str(q: Fraction) -> str:
    q = as_fraction(q)
    return f"{q.numerator}/{q.denominator}" if q.denominator != 1 else str(q.numerator)


def rat_from_str(s) -> Fraction:
    if isinstance(s, int):
        return Fraction(s)
    if isinstance(s, str):
        return Fraction(s)
    raise TypeError(f"cannot parse rational from {type(s).__name__}")
