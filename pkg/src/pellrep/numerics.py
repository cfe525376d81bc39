"""Adaptive-precision reals with recompute-and-compare certification.

A :class:`PrecReal` wraps a zero-argument callable that evaluates an mpmath
expression at whatever working precision is active. Every value is computed
twice, at ``p`` and ``2p`` bits; it counts as certified only when the two
agree to ``2**(-p/2)`` relatively. Signs and comparisons are reported only
when both evaluations agree, otherwise they come back as 0 (undecided) and
the caller escalates.

Exact arithmetic in Q(sqrt 5) is provided by :class:`GoldenNumber` for the
identities that numeric evaluation cannot settle (phi**2 == phi + 1).
"""

from __future__ import annotations

import os
from fractions import Fraction
from typing import Callable, Union

import mpmath
from mpmath import mp, mpf

GUARD_BITS = 32
MIN_PRECISION = 128
MAX_PRECISION = 1 << 16
DEFAULT_PRECISION = 512


class CertificationError(ArithmeticError):
    """A numeric claim could not be certified."""


class PrecisionExhausted(CertificationError):
    """Escalation reached MAX_PRECISION without the two evaluations agreeing."""


def default_precision() -> int:
    """Starting precision in bits, from ``PRECISION_BITS`` (default 512)."""
    raw = os.environ.get("PRECISION_BITS")
    if not raw:
        return DEFAULT_PRECISION
    bits = int(raw)
    if bits < MIN_PRECISION:
        raise ValueError(f"PRECISION_BITS must be >= {MIN_PRECISION}, got {bits}")
    return bits


Expr = Callable[[], mpf]
Number = Union[int, Fraction, "PrecReal", "GoldenNumber"]


def _evaluate(expr: Expr, prec: int) -> mpf:
    with mp.workprec(prec):
        return +mpf(expr())


def _stable(value: mpf, check: mpf, prec: int) -> bool:
    diff = abs(value - check)
    if diff == 0:
        return True
    # absolute floor: values this small are indistinguishable from rounding noise
    if diff <= mpf(2) ** (-prec + GUARD_BITS):
        return True
    return diff <= mpf(2) ** (-(prec // 2)) * abs(check)


class PrecReal:
    """A real number evaluated at two precisions.

    ``value`` is the evaluation at ``prec`` bits and ``check`` the one at
    ``2 * prec`` bits. Arithmetic builds new expressions lazily from the
    operands' callables, so any derived quantity can be re-evaluated at a
    higher precision.
    """

    __slots__ = ("expr", "prec", "value", "check")

    def __init__(self, expr: Expr, prec: int, value: mpf, check: mpf):
        self.expr = expr
        self.prec = prec
        self.value = value
        self.check = check

    # construction -------------------------------------------------------

    @classmethod
    def exact(cls, x: int | Fraction, prec: int | None = None) -> "PrecReal":
        x = Fraction(x)
        num, den = x.numerator, x.denominator
        return eval_at_precision(lambda: mpf(num) / den, prec, escalate=False)

    def at(self, prec: int) -> "PrecReal":
        """Re-evaluate the same expression at ``prec`` bits."""
        return eval_at_precision(self.expr, prec, escalate=False)

    # inspection ---------------------------------------------------------

    @property
    def certified(self) -> bool:
        return _stable(self.value, self.check, self.prec)

    @property
    def error(self) -> mpf:
        return abs(self.value - self.check)

    @property
    def best(self) -> mpf:
        """The higher-precision evaluation."""
        return self.check

    def __float__(self) -> float:
        return float(self.check)

    def __repr__(self) -> str:
        return f"PrecReal({mpmath.nstr(self.check, 20)}, prec={self.prec})"

    def __str__(self) -> str:
        return mpmath.nstr(self.check, 20)

    def digits(self, n: int) -> str:
        return mpmath.nstr(self.check, n, strip_zeros=False)

    # arithmetic ---------------------------------------------------------

    def _binary(self, other, op) -> "PrecReal":
        other = as_precreal(other, self.prec)
        a, b = self.expr, other.expr
        return eval_at_precision(lambda: op(a(), b()), max(self.prec, other.prec))

    def __add__(self, other):
        return self._binary(other, lambda x, y: x + y)

    def __radd__(self, other):
        return as_precreal(other, self.prec) + self

    def __sub__(self, other):
        return self._binary(other, lambda x, y: x - y)

    def __rsub__(self, other):
        return as_precreal(other, self.prec) - self

    def __mul__(self, other):
        return self._binary(other, lambda x, y: x * y)

    def __rmul__(self, other):
        return as_precreal(other, self.prec) * self

    def __truediv__(self, other):
        return self._binary(other, lambda x, y: x / y)

    def __rtruediv__(self, other):
        return as_precreal(other, self.prec) / self

    def __neg__(self):
        a = self.expr
        return eval_at_precision(lambda: -a(), self.prec)

    def __abs__(self):
        a = self.expr
        return eval_at_precision(lambda: abs(a()), self.prec)

    def __pow__(self, e):
        a = self.expr
        if isinstance(e, int):
            return eval_at_precision(lambda: a() ** e, self.prec)
        e = as_precreal(e, self.prec)
        b = e.expr
        return eval_at_precision(lambda: a() ** b(), self.prec)

    # certified comparisons ---------------------------------------------

    def __lt__(self, other):
        return _decide(self - other) < 0

    def __le__(self, other):
        return _decide(self - other) < 0

    def __gt__(self, other):
        return _decide(self - other) > 0

    def __ge__(self, other):
        return _decide(self - other) > 0


def as_precreal(x: Number, prec: int | None = None) -> PrecReal:
    if isinstance(x, PrecReal):
        return x
    if isinstance(x, GoldenNumber):
        return x.to_precreal(prec)
    if isinstance(x, (int, Fraction)):
        return PrecReal.exact(x, prec)
    if isinstance(x, (float, mpf)):
        v = mpf(x)
        return eval_at_precision(lambda: v, prec, escalate=False)
    raise TypeError(f"cannot convert {type(x).__name__} to PrecReal")


def eval_at_precision(expr: Expr, prec: int | None = None, *,
                      escalate: bool = True) -> PrecReal:
    """Evaluate ``expr`` at ``prec`` and ``2*prec`` bits.

    With ``escalate`` the precision is doubled until the two evaluations
    agree; :class:`PrecisionExhausted` is raised past ``MAX_PRECISION``.
    """
    p = default_precision() if prec is None else int(prec)
    if p < MIN_PRECISION:
        p = MIN_PRECISION
    while True:
        value = _evaluate(expr, p)
        check = _evaluate(expr, 2 * p)
        if not escalate or _stable(value, check, p):
            return PrecReal(expr, p, value, check)
        if 2 * p > MAX_PRECISION:
            raise PrecisionExhausted(
                f"evaluations at {p} and {2 * p} bits disagree")
        p *= 2


def certified_sign(x: Number) -> int:
    """Sign of ``x``: -1, +1, or 0 when undecided.

    Exact inputs (int, Fraction, GoldenNumber) get their exact sign, so an
    exact zero returns 0 and means zero. For a PrecReal, 0 means the two
    evaluations did not agree and the caller should escalate.
    """
    if isinstance(x, GoldenNumber):
        return x.sign()
    if isinstance(x, (int, Fraction)):
        return (x > 0) - (x < 0)
    v, c = x.value, x.check
    if v == 0 or c == 0:
        return 0
    if (v > 0) != (c > 0):
        return 0
    if abs(c) <= mpf(2) ** (-x.prec + GUARD_BITS):
        return 0
    if abs(v - c) * 2 >= abs(c):
        return 0
    return 1 if c > 0 else -1


def sign_escalating(x: PrecReal, max_prec: int = MAX_PRECISION) -> int:
    """Certified sign, doubling precision while undecided. Returns 0 if
    the sign is still undecided at ``max_prec``."""
    s = certified_sign(x)
    p = x.prec
    while s == 0 and 2 * p <= max_prec:
        p *= 2
        x = x.at(p)
        s = certified_sign(x)
    return s


def _decide(x: PrecReal) -> int:
    s = sign_escalating(x)
    if s == 0:
        raise CertificationError("comparison undecided at maximum precision")
    return s


def certify_less(a: Number, b: Number) -> bool:
    """True iff ``a < b`` is certified; raises if undecidable."""
    if all(isinstance(v, (int, Fraction, GoldenNumber)) for v in (a, b)):
        return certified_sign(GoldenNumber.coerce(b) - GoldenNumber.coerce(a)) > 0
    return _decide(as_precreal(b) - as_precreal(a)) > 0


# elementary functions ----------------------------------------------------

def phi(prec: int | None = None) -> PrecReal:
    """The golden ratio (1 + sqrt 5) / 2."""
    return eval_at_precision(lambda: (1 + mpmath.sqrt(5)) / 2, prec)


def log(x: Number, prec: int | None = None) -> PrecReal:
    x = as_precreal(x, prec)
    a = x.expr
    return eval_at_precision(lambda: mpmath.log(a()), prec or x.prec)


def exp(x: Number, prec: int | None = None) -> PrecReal:
    x = as_precreal(x, prec)
    a = x.expr
    return eval_at_precision(lambda: mpmath.exp(a()), prec or x.prec)


def sqrt(x: Number, prec: int | None = None) -> PrecReal:
    x = as_precreal(x, prec)
    a = x.expr
    return eval_at_precision(lambda: mpmath.sqrt(a()), prec or x.prec)


# exact arithmetic in Q(sqrt 5) ---------------------------------------------

class GoldenNumber:
    """Exact element ``a + b*phi`` of Q(sqrt 5), ``a`` and ``b`` rational."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        self.a = Fraction(a)
        self.b = Fraction(b)

    @classmethod
    def coerce(cls, x) -> "GoldenNumber":
        if isinstance(x, GoldenNumber):
            return x
        if isinstance(x, (int, Fraction)):
            return cls(x, 0)
        raise TypeError(f"cannot embed {type(x).__name__} in Q(sqrt 5)")

    @classmethod
    def phi(cls) -> "GoldenNumber":
        return cls(0, 1)

    def conjugate(self) -> "GoldenNumber":
        # phi -> 1 - phi
        return GoldenNumber(self.a + self.b, -self.b)

    def norm(self) -> Fraction:
        return self.a * self.a + self.a * self.b - self.b * self.b

    def __eq__(self, other):
        try:
            other = GoldenNumber.coerce(other)
        except TypeError:
            return NotImplemented
        return self.a == other.a and self.b == other.b

    def __hash__(self):
        return hash((self.a, self.b))

    def __add__(self, other):
        other = GoldenNumber.coerce(other)
        return GoldenNumber(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __neg__(self):
        return GoldenNumber(-self.a, -self.b)

    def __sub__(self, other):
        return self + (-GoldenNumber.coerce(other))

    def __rsub__(self, other):
        return GoldenNumber.coerce(other) - self

    def __mul__(self, other):
        other = GoldenNumber.coerce(other)
        # phi**2 = phi + 1
        bb = self.b * other.b
        return GoldenNumber(self.a * other.a + bb,
                            self.a * other.b + self.b * other.a + bb)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = GoldenNumber.coerce(other)
        n = other.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt 5)")
        num = self * other.conjugate()
        return GoldenNumber(num.a / n, num.b / n)

    def __rtruediv__(self, other):
        return GoldenNumber.coerce(other) / self

    def __pow__(self, e: int):
        if not isinstance(e, int):
            return NotImplemented
        if e < 0:
            return GoldenNumber(1) / (self ** -e)
        result, base = GoldenNumber(1), self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def sign(self) -> int:
        # a + b*phi = (2a + b)/2 + (b/2) sqrt 5
        u, v = 2 * self.a + self.b, self.b
        su, sv = (u > 0) - (u < 0), (v > 0) - (v < 0)
        if sv == 0:
            return su
        if su == 0 or su == sv:
            return sv
        # opposite signs: compare u**2 with 5 v**2
        return su if u * u > 5 * v * v else sv if u * u < 5 * v * v else 0

    def to_precreal(self, prec: int | None = None) -> PrecReal:
        a, b = self.a, self.b
        return eval_at_precision(
            lambda: mpf(a.numerator) / a.denominator
            + mpf(b.numerator) / b.denominator * (1 + mpmath.sqrt(5)) / 2, prec)

    def __float__(self):
        return float(self.to_precreal(128))

    def __repr__(self):
        return f"GoldenNumber({self.a}, {self.b})"
