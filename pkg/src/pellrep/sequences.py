"""k-generalized Pell-Lucas numbers: exact terms, the dominant root and
the golden-ratio approximations used to bound solutions.

Q_n = 2 Q_{n-1} + Q_{n-2} + ... + Q_{n-k} for n >= 2, with
Q_{-(k-2)} = ... = Q_{-1} = 0 and Q_0 = Q_1 = 2.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

import mpmath
from mpmath import mp, mpf

from .numerics import (
    GUARD_BITS,
    CertificationError,
    GoldenNumber,
    PrecReal,
    as_precreal,
    certified_sign,
    certify_less,
    eval_at_precision,
    sign_escalating,
)

G_LOWER = Fraction(276, 1000)
G_UPPER = Fraction(1, 2)
XI_CONSTANT = Fraction(125, 100)
ZETA_CONSTANT = 41


def _check_k(k: int) -> None:
    if not isinstance(k, int) or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k!r}")


# exact terms ---------------------------------------------------------------

def iter_terms(k: int, start: int = 1) -> Iterator[tuple[int, int]]:
    """Yield ``(n, Q_n)`` for n = start, start+1, ... without end.

    Keeps only the last k terms and their running sum.
    """
    _check_k(k)
    if start < -(k - 2):
        raise ValueError(f"n must be >= {-(k - 2)} for k={k}, got {start}")
    window = deque([0] * (k - 2) + [2, 2], maxlen=k)
    total = 4
    n = 1
    for i, v in zip(range(-(k - 2), 2), window):
        if i >= start:
            yield i, v
    while True:
        n += 1
        # 2Q_{n-1} + Q_{n-2} + ... + Q_{n-k} = Q_{n-1} + sum(window)
        new = window[-1] + total
        total += new - window[0]
        window.append(new)
        if n >= start:
            yield n, new


def term(k: int, n: int) -> int:
    """Exact value of Q_n^(k)."""
    _check_k(k)
    if n < -(k - 2):
        raise ValueError(f"n must be >= {-(k - 2)} for k={k}, got {n}")
    for i, v in iter_terms(k, start=n):
        return v


def terms(k: int, n_max: int) -> list[int]:
    """``[Q_1, ..., Q_{n_max}]``."""
    out = []
    for n, v in iter_terms(k, start=1):
        if n > n_max:
            break
        out.append(v)
    return out


def fibonacci(m: int) -> int:
    if m < 0:
        raise ValueError("m must be >= 0")
    a, b = 0, 1
    for _ in range(m):
        a, b = b, a + b
    return a


def characteristic_poly(k: int, x):
    """Phi_k(x) = x^k - 2x^(k-1) - x^(k-2) - ... - x - 1, by Horner."""
    acc = 1 * x - 2
    for _ in range(k - 1):
        acc = acc * x - 1
    return acc


# dominant root ---------------------------------------------------------------

def _phi_mpf() -> mpf:
    return (1 + mpmath.sqrt(5)) / 2


def _shifted_phi(x: mpf, k: int) -> mpf:
    # (x - 1) Phi_k(x) = x^(k-1) (x^2 - 3x + 1) + 1; same sign as Phi_k for x > 1
    return x ** (k - 1) * (x * x - 3 * x + 1) + 1


def root_bracket(k: int) -> tuple[mpf, mpf]:
    """``(phi^2 (1 - phi^-k), phi^2)`` at the working precision."""
    ph2 = _phi_mpf() ** 2
    return ph2 * (1 - _phi_mpf() ** (-k)), ph2


@lru_cache(maxsize=8192)
def _gamma_at(k: int, prec: int) -> mpf:
    # rounding in x^2 - 3x + 1 is amplified by x^(k-1) ~ 2^(1.39k) near phi^2
    wp = prec + 3 * k // 2 + 2 * GUARD_BITS
    with mp.workprec(wp):
        lo, hi = root_bracket(k)
        if not (_shifted_phi(lo, k) < 0 < _shifted_phi(hi, k)):
            raise CertificationError(f"bracket does not isolate the root for k={k}")
        eps = mpf(2) ** (-(prec + 8))
        while hi - lo > eps:
            mid = (lo + hi) / 2
            if _shifted_phi(mid, k) < 0:
                lo = mid
            else:
                hi = mid
        root = (lo + hi) / 2
    return +root


def _gamma_expr(k: int):
    return lambda: _gamma_at(k, mp.prec)


def root_precision(k: int) -> int:
    return max(256, 4 * k)


def dominant_root(k: int, prec: int | None = None) -> PrecReal:
    """The unique positive root gamma(k) of Phi_k, found by bisection on
    the bracket ``(phi^2(1 - phi^-k), phi^2)``.

    The result is checked to straddle a sign change at distance
    ``2**(-prec + GUARD_BITS)``.
    """
    _check_k(k)
    p = max(prec or 0, root_precision(k))
    g = eval_at_precision(_gamma_expr(k), p)
    with mp.workprec(2 * g.prec + k + GUARD_BITS):
        eps = mpf(2) ** (-g.prec + GUARD_BITS)
        left = _shifted_phi(g.check - eps, k)
        right = _shifted_phi(g.check + eps, k)
    if not (left < 0 < right):
        raise CertificationError(f"gamma({k}) does not straddle a sign change")
    return g


def g_k_at(k: int, z):
    """g_k(z) = (z - 1) / ((k + 1) z^2 - 3k z + k - 1).

    Works on PrecReal, GoldenNumber, Fraction or int arguments. A PrecReal
    denominator must have a certified sign; an exact zero denominator
    raises ZeroDivisionError.
    """
    _check_k(k)
    den = (k + 1) * z * z - 3 * k * z + (k - 1)
    if isinstance(den, PrecReal):
        if sign_escalating(den) == 0:
            raise CertificationError("sign of g_k denominator undecided")
    elif certified_sign(den) == 0:
        raise ZeroDivisionError(f"g_{k} has a pole at {z!r}")
    if isinstance(z, int):
        return Fraction(z - 1) / den
    return (z - 1) / den


# context ---------------------------------------------------------------------

@dataclass
class PellLucasContext:
    """gamma(k), g_k(gamma) and a term cache for one k."""

    k: int
    gamma: PrecReal
    g_gamma: PrecReal
    _cache: list = field(default_factory=list, repr=False)

    @classmethod
    def create(cls, k: int, prec: int | None = None) -> "PellLucasContext":
        gamma = dominant_root(k, prec)
        g = g_k_at(k, gamma)
        ctx = cls(k, gamma, g)
        ctx.check_invariants()
        return ctx

    def check_invariants(self) -> None:
        lo, hi = root_interval(self.k, self.gamma.prec)
        if not (lo < self.gamma < hi):
            raise CertificationError(f"gamma({self.k}) outside its interval")
        if not (self.g_gamma > G_LOWER and self.g_gamma < G_UPPER):
            raise CertificationError(f"g_k(gamma) outside (0.276, 0.5) for k={self.k}")

    def term(self, n: int) -> int:
        if n < 1:
            return term(self.k, n)
        if len(self._cache) < n:
            self._cache = terms(self.k, max(n, 2 * len(self._cache)))
        return self._cache[n - 1]

    @property
    def coefficient(self) -> PrecReal:
        """(2 gamma - 2) g_k(gamma)."""
        return (2 * self.gamma - 2) * self.g_gamma


def root_interval(k: int, prec: int | None = None) -> tuple[PrecReal, PrecReal]:
    lo = eval_at_precision(lambda: root_bracket(k)[0], prec)
    hi = eval_at_precision(lambda: _phi_mpf() ** 2, prec)
    return lo, hi


def dominant_approx(ctx: PellLucasContext, n: int) -> PrecReal:
    """(2 gamma - 2) g_k(gamma) gamma^n, which is within 2 of Q_n."""
    if n < 2 - ctx.k:
        raise ValueError(f"n must be >= {2 - ctx.k}")
    c, g = ctx.coefficient.expr, ctx.gamma.expr
    prec = ctx.gamma.prec + max(n, 0).bit_length()
    return eval_at_precision(lambda: c() * g() ** n, prec)


def dominant_error_ok(ctx: PellLucasContext, n: int) -> bool:
    """Certified ``|Q_n - (2 gamma - 2) g_k(gamma) gamma^n| < 2``."""
    diff = abs(dominant_approx(ctx, n) - ctx.term(n))
    return certify_less(diff, 2)


def growth_bounds_check(ctx: PellLucasContext, n: int) -> bool:
    """Certified ``gamma^(n-1) <= Q_n <= 2 gamma^n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    q = ctx.term(n)
    g = ctx.gamma.expr
    prec = ctx.gamma.prec + n.bit_length()
    low = eval_at_precision(lambda: g() ** (n - 1), prec)
    high = eval_at_precision(lambda: 2 * g() ** n, prec)
    # n = 1 gives gamma^0 = 1 exactly
    low_ok = q >= 1 if n == 1 else certify_less(low, q)
    return low_ok and certify_less(q, high)


# golden-ratio approximations for large k -----------------------------------

def _phi_main_term(n: int, prec: int) -> PrecReal:
    # 2 phi^(2n+1) / (phi + 2)
    return eval_at_precision(lambda: 2 * _phi_mpf() ** (2 * n + 1) / (_phi_mpf() + 2), prec)


def _phi_half_power(k: int, prec: int) -> PrecReal:
    return eval_at_precision(lambda: _phi_mpf() ** (mpf(k) / 2), prec)


def phi_error_xi(k: int, n: int, prec: int | None = None) -> PrecReal:
    """xi with (2 gamma - 2) g_k(gamma) gamma^n = 2 phi^(2n+1)/(phi+2) (1 + xi).

    Requires k >= 50 and 1 < n < phi^(k/2). Checks on the way that
    |(2 gamma - 2) gamma^n - 2 phi^(2n+1)| < 4 phi^(2n) / phi^(k/2) and
    |g_k(gamma) - g_k(phi^2)| < 4k / phi^k, then that |xi| < 1.25 / phi^(k/2).
    """
    _check_k(k)
    if k < 50:
        raise ValueError("phi_error_xi requires k >= 50")
    p = max(prec or 0, root_precision(k)) + 2 * n.bit_length()
    half = _phi_half_power(k, p)
    if not (n > 1 and certify_less(n, half)):
        raise ValueError(f"phi_error_xi requires 1 < n < phi^(k/2), got n={n}")

    gamma = dominant_root(k, p)
    gm = gamma.expr
    delta = eval_at_precision(
        lambda: (2 * gm() - 2) * gm() ** n - 2 * _phi_mpf() ** (2 * n + 1), p)
    delta_cap = eval_at_precision(
        lambda: 4 * _phi_mpf() ** (2 * n) / _phi_mpf() ** (mpf(k) / 2), p)
    if not certify_less(abs(delta), delta_cap):
        raise CertificationError(f"(2g-2)g^n vs 2phi^(2n+1) bound fails at k={k}, n={n}")

    g_gamma = g_k_at(k, gamma)
    g_phi2 = eval_at_precision(lambda: 1 / (_phi_mpf() + 2), p)
    eta_cap = eval_at_precision(lambda: 4 * k / _phi_mpf() ** k, p)
    if not certify_less(abs(g_gamma - g_phi2), eta_cap):
        raise CertificationError(f"|g_k(gamma) - g_k(phi^2)| bound fails at k={k}")

    gg = g_gamma.expr
    xi = eval_at_precision(
        lambda: (2 * gm() - 2) * gg() * gm() ** n
        / (2 * _phi_mpf() ** (2 * n + 1) / (_phi_mpf() + 2)) - 1, p)
    cap = eval_at_precision(lambda: mpf(5) / 4 / _phi_mpf() ** (mpf(k) / 2), p)
    if not certify_less(abs(xi), cap):
        raise CertificationError(f"|xi| >= 1.25/phi^(k/2) at k={k}, n={n}")
    return xi


def phi_approx_term(k: int, n: int, prec: int | None = None) -> tuple[PrecReal, PrecReal]:
    """``(2 phi^(2n+1)/(phi+2), zeta)`` with Q_n = main (1 + zeta) and
    |zeta| < 41 / phi^(k/2).

    Requires 2n >= k/2 and n < phi^(k/2); the bound is only derived for
    k >= 50, so smaller k emits a warning.
    """
    _check_k(k)
    if 4 * n < k:
        raise ValueError(f"phi_approx_term requires 2n >= k/2, got k={k}, n={n}")
    p = max(prec or 0, root_precision(k)) + 2 * n.bit_length()
    if not certify_less(n, _phi_half_power(k, p)):
        raise ValueError(f"phi_approx_term requires n < phi^(k/2), got k={k}, n={n}")
    if k < 50:
        warnings.warn(f"the 41/phi^(k/2) bound is derived for k >= 50 (k={k})",
                      stacklevel=2)
    q = term(k, n)
    main = _phi_main_term(n, p)
    mm = main.expr
    zeta = eval_at_precision(lambda: q / mm() - 1, p)
    cap = eval_at_precision(lambda: ZETA_CONSTANT / _phi_mpf() ** (mpf(k) / 2), p)
    if not certify_less(abs(zeta), cap):
        raise CertificationError(f"|zeta| >= 41/phi^(k/2) at k={k}, n={n}")
    return main, zeta


def golden_g_at_phi_squared(k: int) -> GoldenNumber:
    """g_k(phi^2) computed exactly in Q(sqrt 5)."""
    return g_k_at(k, GoldenNumber.phi() ** 2)


__all__ = [
    "PellLucasContext", "iter_terms", "term", "terms", "fibonacci",
    "characteristic_poly", "dominant_root", "g_k_at", "dominant_approx",
    "dominant_error_ok", "growth_bounds_check", "phi_error_xi",
    "phi_approx_term", "root_interval", "golden_g_at_phi_squared", "as_precreal",
]
