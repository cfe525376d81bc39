"""Explicit upper bounds from linear forms in logarithms.

Matveev's lower bound for a nonzero linear form, the two transfer lemmas
(de Weger's log(1+x) estimate and Sanchez's x/(log x)^m inversion) and the
replayed chain that turns them into bounds on n, first in terms of k and
then absolutely.

Chains are replayed step by step: each step computes the raw value of its
right-hand side, checks it against the rounded constant the argument
carries forward, and records the check in a :class:`BoundReport`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
from mpmath import mp, mpf

from .numerics import (
    CertificationError,
    PrecReal,
    as_precreal,
    certify_less,
    eval_at_precision,
)
from .sequences import dominant_root, g_k_at

BOUND_PREC = 256
MATVEEV_FACTOR = Fraction(7, 5)

# constants carried forward by the argument
LAMBDA1_MATVEEV = Fraction("3.7e12")
LAMBDA1_FINAL = Fraction("1.68e13")
LAMBDA2_HEIGHT = Fraction("1.69e13")
LAMBDA2_MATVEEV = Fraction("2.76e25")
LAMBDA2_FINAL = Fraction("4e25")
NK_SANCHEZ = Fraction("1.6e26")
NK_LOG_FACTOR = Fraction("91.5")
NK_FINAL = Fraction("1.34e30")
HEIGHT_CAP = Fraction("10.2")


def _pr(fn, prec: int = BOUND_PREC) -> PrecReal:
    return eval_at_precision(fn, prec)


def _mpf(x) -> mpf:
    if isinstance(x, Fraction):
        return mpf(x.numerator) / x.denominator
    if isinstance(x, PrecReal):
        return x.expr()
    return mpf(x)


def _phi() -> mpf:
    return (1 + mpmath.sqrt(5)) / 2


def round_up(x, sig: int = 4) -> str:
    """Decimal rendering of ``x`` rounded up to ``sig`` significant digits."""
    v = x.best if isinstance(x, PrecReal) else _mpf(x)
    if v <= 0:
        raise ValueError("round_up expects a positive value")
    with mp.workprec(BOUND_PREC):
        e = int(mpmath.floor(mpmath.log10(v)))
        mant = int(mpmath.ceil(v / mpf(10) ** (e - sig + 1)))
        if mant >= 10 ** sig:
            mant = -(-mant // 10)
            e += 1
    s = str(mant)
    return f"{s[0]}.{s[1:]}e{e}" if sig > 1 else f"{s}e{e}"


# data types ----------------------------------------------------------------

@dataclass(frozen=True)
class LinearFormInstance:
    """Inputs of Matveev's bound for ``eta_1^a_1 ... eta_s^a_s - 1``."""

    s: int
    d_L: int
    D: object
    B: tuple
    label: str = ""
    eta_descriptions: tuple = ()

    def __post_init__(self):
        if self.s < 2:
            raise ValueError("a linear form needs s >= 2 terms")
        if len(self.B) != self.s:
            raise ValueError(f"expected {self.s} height bounds, got {len(self.B)}")
        if self.d_L < 1:
            raise ValueError("field degree must be >= 1")
        for j, b in enumerate(self.B, 1):
            if not certify_less(Fraction(16, 100) - Fraction(1, 10 ** 12), b):
                raise ValueError(f"B_{j} must be >= 0.16")
        if not certify_less(Fraction(1) - Fraction(1, 10 ** 12), self.D):
            raise ValueError("D must be >= 1")


@dataclass
class BoundReport:
    stage: str
    formula: str
    value: PrecReal
    inputs: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(holds for _, holds in self.checks)

    def check(self, claim: str, holds: bool) -> None:
        self.checks.append((claim, bool(holds)))

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "formula": self.formula,
            "value": round_up(self.value, 4),
            "value_digits": self.value.digits(30),
            "inputs": {k: (v if isinstance(v, str) else str(v)) for k, v in self.inputs.items()},
            "checks": [{"claim": c, "holds": h} for c, h in self.checks],
            "notes": list(self.notes),
            "ok": self.ok,
        }


# primitives ------------------------------------------------------------------

def matveev_constant(s: int) -> PrecReal:
    """1.4 * 30^(s+3) * s^4.5."""
    return _pr(lambda: _mpf(MATVEEV_FACTOR) * mpf(30) ** (s + 3) * mpf(s) ** mpf(4.5))


def matveev_bound(inst: LinearFormInstance) -> PrecReal:
    """Upper bound for -log|Lambda| from Matveev's theorem."""
    s, d = inst.s, inst.d_L
    D = as_precreal(inst.D, BOUND_PREC).expr
    bs = [as_precreal(b, BOUND_PREC).expr for b in inst.B]

    def expr():
        out = (_mpf(MATVEEV_FACTOR) * mpf(30) ** (s + 3) * mpf(s) ** mpf(4.5)
               * mpf(d) ** 2 * (1 + mpmath.log(d)) * (1 + mpmath.log(D())))
        for b in bs:
            out *= b()
        return out

    return _pr(expr)


def deweger_factor(a) -> PrecReal:
    """-log(1 - a) / a."""
    av = as_precreal(a, BOUND_PREC).expr
    return _pr(lambda: -mpmath.log(1 - av()) / av())


def deweger_transfer(lambda_abs_bound, a) -> PrecReal:
    """Bound on |log(1 + x)| given |x| < lambda_abs_bound < a < 1."""
    if not (certify_less(0, a) and certify_less(a, 1)):
        raise ValueError("need 0 < a < 1")
    if not certify_less(lambda_abs_bound, a):
        raise ValueError("the bound on |Lambda| must be below a")
    return deweger_factor(a) * lambda_abs_bound


def sanchez_bound(m: int, S) -> PrecReal:
    """2^m S (log S)^m, an upper bound for x whenever x/(log x)^m < S."""
    if m < 1:
        raise ValueError("m must be >= 1")
    Sv = as_precreal(S, BOUND_PREC)
    if certify_less(Sv, (4 * m * m) ** m):
        raise ValueError(f"S must be >= (4m^2)^m = {(4 * m * m) ** m}")
    e = Sv.expr
    return _pr(lambda: mpf(2) ** m * e() * mpmath.log(e()) ** m)


def bound_n_in_k(k: int) -> PrecReal:
    """1.34e30 k^8 (log k)^5."""
    if k < 2:
        raise ValueError("k must be >= 2")
    return _pr(lambda: _mpf(NK_FINAL) * mpf(k) ** 8 * mpmath.log(k) ** 5)


@dataclass(frozen=True)
class HeightBound:
    exact: PrecReal
    cap: PrecReal


def height_eta3_lambda1(k: int) -> HeightBound:
    """log 9 + log 4 + 5 log k, and the cap 10.2 log k it is replaced by."""
    if k < 2:
        raise ValueError("k must be >= 2")
    exact = _pr(lambda: mpmath.log(9) + mpmath.log(4) + 5 * mpmath.log(k))
    cap = _pr(lambda: _mpf(HEIGHT_CAP) * mpmath.log(k))
    if not certify_less(exact, cap):
        raise CertificationError(f"height cap 10.2 log k fails at k={k}")
    return HeightBound(exact, cap)


def lm_window(n: int, gamma=None) -> tuple[Fraction, Fraction]:
    """Range of l + m compatible with n: (n - 1)/3.4 < l + m < (n + 2.6)/2."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if gamma is not None and not (certify_less(2, gamma) and certify_less(gamma, 3)):
        raise ValueError("the window assumes 2 < gamma < 3")
    return (Fraction(n - 1) / Fraction("3.4"), (n + Fraction("2.6")) / 2)


# replayed chains -------------------------------------------------------------

def lambda1_instance(k: int, n: int) -> LinearFormInstance:
    return LinearFormInstance(
        s=3, d_L=k, D=n,
        B=(_pr(lambda: k * mpmath.log(10)), _pr(lambda: mpmath.log(3)),
           _pr(lambda: _mpf(HEIGHT_CAP) * k * mpmath.log(k))),
        label="Lambda1",
        eta_descriptions=("10", "gamma", "9(2gamma-2)g_k(gamma)/a"),
    )


def _simplification_checks(report: BoundReport, k: int, n: int) -> None:
    report.check("1 + log k < 2.5 log k",
                 certify_less(_pr(lambda: 1 + mpmath.log(k)), _pr(lambda: mpf(2.5) * mpmath.log(k))))
    report.check("1 + log n < 1.8 log n",
                 certify_less(_pr(lambda: 1 + mpmath.log(n)), _pr(lambda: mpf(1.8) * mpmath.log(n))))


def lambda1_height_chain(k: int, a: int) -> list[tuple[str, bool]]:
    """Checked inequalities bounding the height of 9(2 gamma - 2) g_k(gamma)/a.

    The conjugate bound |2 gamma_i - 2| < 4 rests on |gamma_i| < 1 for the
    non-dominant roots, which is taken as given.
    """
    g = dominant_root(k)
    frac = Fraction(9, a)
    hb = height_eta3_lambda1(k)
    eta3 = 9 * (2 * g - 2) * g_k_at(k, g) / a
    return [
        ("h(9/a) <= log 9", max(frac.numerator, frac.denominator) <= 9),
        ("|2 gamma - 2| < 4", certify_less(2 * g - 2, 4)),
        ("log 9 + log 4 + 5 log k < 10.2 log k", certify_less(hb.exact, hb.cap)),
        ("|log eta3| <= 10.2 k log k",
         certify_less(abs(_pr(lambda: mpmath.log(eta3.expr()))),
                      _pr(lambda: _mpf(HEIGHT_CAP) * k * mpmath.log(k)))),
    ]


def lambda1_pipeline(k: int, n: int) -> BoundReport:
    """Replay of the bound l log 10 < 1.68e13 k^4 log^2 k log n."""
    if n < 4:
        raise ValueError("the simplification 1 + log n < 1.8 log n needs n >= 4")
    inst = lambda1_instance(k, n)
    raw = matveev_bound(inst)
    final = _pr(lambda: _mpf(LAMBDA1_FINAL) * mpf(k) ** 4 * mpmath.log(k) ** 2 * mpmath.log(n))
    rep = BoundReport("lambda1", "l log 10 < 1.68e13 k^4 log^2 k log n", final,
                      inputs={"k": k, "n": n, "matveev_raw": round_up(raw)})
    hb = height_eta3_lambda1(k)
    rep.check("log 9 + log 4 + 5 log k < 10.2 log k", certify_less(hb.exact, hb.cap))
    rep.check("matveev 1.4*30^6*3^4.5 <= 1.432e11",
              certify_less(matveev_constant(3), Fraction("1.432e11")))
    mid = _pr(lambda: _mpf(LAMBDA1_MATVEEV) * mpf(k) ** 4 * mpmath.log(k)
              * (1 + mpmath.log(k)) * (1 + mpmath.log(n)))
    rep.check("Matveev bound <= 3.7e12 k^4 log k (1+log k)(1+log n)", certify_less(raw, mid))
    _simplification_checks(rep, k, n)
    rep.check("3.7e12 k^4 log k (1+log k)(1+log n) + log 11.8 < final",
              certify_less(mid + _pr(lambda: mpmath.log(mpf(11.8))), final))
    return rep


def lambda2_pipeline(k: int, n: int) -> BoundReport:
    """Replay of n / (log n)^2 < 4e25 k^8 log^3 k."""
    if n < 4:
        raise ValueError("the simplification 1 + log n < 1.8 log n needs n >= 4")
    l_bound = lambda1_pipeline(k, n).value
    lb = l_bound.expr
    h3 = _pr(lambda: 4 * mpmath.log(9) + mpmath.log(2) + mpmath.log(4) + 5 * mpmath.log(k) + lb())
    h3_cap = _pr(lambda: _mpf(LAMBDA2_HEIGHT) * mpf(k) ** 4 * mpmath.log(k) ** 2 * mpmath.log(n))
    b3 = _pr(lambda: _mpf(LAMBDA2_HEIGHT) * mpf(k) ** 5 * mpmath.log(k) ** 2 * mpmath.log(n))
    inst = LinearFormInstance(
        s=3, d_L=k, D=n,
        B=(_pr(lambda: k * mpmath.log(10)), _pr(lambda: mpmath.log(3)), b3),
        label="Lambda2",
        eta_descriptions=("10", "gamma", "(a 10^l - a + b)/(9(2gamma-2)g_k(gamma))"),
    )
    raw = matveev_bound(inst)
    mid = _pr(lambda: _mpf(LAMBDA2_MATVEEV) * mpf(k) ** 8 * mpmath.log(k) ** 3 * mpmath.log(n) ** 2)
    S = _pr(lambda: _mpf(LAMBDA2_FINAL) * mpf(k) ** 8 * mpmath.log(k) ** 3)
    rep = BoundReport("lambda2", "n / (log n)^2 < 4e25 k^8 log^3 k", S,
                      inputs={"k": k, "n": n, "matveev_raw": round_up(raw)})
    rep.notes.append("the height being bounded is that of the third number eta3; "
                     "it is labelled h(eta1) in the source argument")
    rep.check("h(eta3) < 1.69e13 k^4 log^2 k log n", certify_less(h3, h3_cap))
    rep.check("B3 = 1.69e13 k^5 log^2 k log n >= k h(eta3)", certify_less(k * h3, b3))
    g = dominant_root(k)
    coef = (2 * g - 2) * g_k_at(k, g)
    rep.check("3 / ((2gamma-2) g_k(gamma)) < 5.5", certify_less(3 / coef, Fraction("5.5")))
    _simplification_checks(rep, k, n)
    rep.check("Matveev bound <= 2.76e25 k^8 log^3 k log^2 n", certify_less(raw, mid))
    # n log gamma - log 5.5 < mid with gamma > 2
    lhs = _pr(lambda: (mid.expr() + mpmath.log(mpf(5.5))) / mpmath.log(2))
    rep.check("(2.76e25 k^8 log^3 k log^2 n + log 5.5) / log 2 < 4e25 k^8 log^3 k log^2 n",
              certify_less(lhs, _pr(lambda: S.expr() * mpmath.log(n) ** 2)))
    return rep


def n_in_k_pipeline(k: int) -> BoundReport:
    """Replay of n < 1.34e30 k^8 log^5 k from n/(log n)^2 < 4e25 k^8 log^3 k."""
    S = _pr(lambda: _mpf(LAMBDA2_FINAL) * mpf(k) ** 8 * mpmath.log(k) ** 3)
    x = sanchez_bound(2, S)
    final = bound_n_in_k(k)
    rep = BoundReport("n_in_k", "n < 1.34e30 k^8 log^5 k", final,
                      inputs={"k": k, "S": round_up(S), "sanchez_raw": round_up(x)})
    log_cap = _pr(lambda: _mpf(NK_LOG_FACTOR) * mpmath.log(k))
    rep.check("log S < 91.5 log k", certify_less(_pr(lambda: mpmath.log(S.expr())), log_cap))
    rep.check("58.95 + 8 log k + 3 log log k < 91.5 log k",
              certify_less(_pr(lambda: mpf(58.95) + 8 * mpmath.log(k) + 3 * mpmath.log(mpmath.log(k))),
                           log_cap))
    rep.check("2^2 * 4e25 = 1.6e26", 4 * LAMBDA2_FINAL == NK_SANCHEZ)
    mid = _pr(lambda: _mpf(NK_SANCHEZ) * mpf(k) ** 8 * mpmath.log(k) ** 3
              * (_mpf(NK_LOG_FACTOR) * mpmath.log(k)) ** 2)
    rep.check("2^2 S (log S)^2 < 1.6e26 k^8 log^3 k (91.5 log k)^2", certify_less(x, mid))
    rep.check("1.6e26 * 91.5^2 <= 1.34e30", certify_less(mid, _pr(lambda: final.expr() * (1 + mpf(10) ** -30))))
    return rep


# absolute bound ---------------------------------------------------------------

@dataclass
class ChainStep:
    label: str
    raw: PrecReal
    printed: Fraction

    @property
    def holds(self) -> bool:
        return certify_less(self.raw, self.printed) or self.raw.best == _mpf(self.printed)


def _step(report: BoundReport, steps: list, label: str, raw: PrecReal, printed: str) -> mpf:
    st = ChainStep(label, raw, Fraction(printed))
    steps.append(st)
    report.check(f"{label}: {round_up(raw, 5)} <= {printed}", st.holds)
    return _mpf(st.printed)


def lambda3_constant() -> PrecReal:
    """Coefficient c in -log|Lambda3| < c log n (before rounding to 4.67e13)."""
    inst = LinearFormInstance(
        s=3, d_L=2, D=1,
        B=(_pr(lambda: mpmath.log(72 ** 2 * _phi())), _pr(lambda: mpmath.log(_phi())),
           _pr(lambda: 2 * mpmath.log(10))),
        label="Lambda3",
        eta_descriptions=("a(phi+2)/18", "phi", "10"),
    )
    # D = 1 leaves (1 + log D) = 1; it is replaced by 2.4 log n
    base = matveev_bound(inst)
    return _pr(lambda: base.expr() * mpf(2.4))


def absolute_bound_cases() -> dict[str, BoundReport]:
    """Replay both cases of the absolute bound on n (large k)."""
    steps: list[ChainStep] = []
    c1 = BoundReport("absolute-case1", "n < 2^13 S (log S)^13, S = 2.81e144",
                     _pr(lambda: mpf(0)))
    c1.check("1 + log(2n+1) < 2.4 log n for n >= 4",
             certify_less(_pr(lambda: 1 + mpmath.log(9)), _pr(lambda: mpf(2.4) * mpmath.log(4))))
    c3 = _step(c1, steps, "Lambda3 coefficient", lambda3_constant(), "4.67e13")
    kc = _step(c1, steps, "k bound coefficient", _pr(lambda: 2 * c3 / mpmath.log(_phi())), "1.95e14")
    S1 = _step(c1, steps, "case 1 S", _pr(lambda: _mpf(NK_FINAL) * kc ** 8), "2.81e144")
    n1 = sanchez_bound(13, _pr(lambda: S1))
    _step(c1, steps, "case 1 n", n1, "1.41e181")
    c1.value = n1

    c2 = BoundReport("absolute-case2", "n < 2^21 S (log S)^21, S = 5.1e248",
                     _pr(lambda: mpf(0)))
    h3 = _step(c2, steps, "h(eta3) coefficient",
               _pr(lambda: mpmath.log(27) + mpmath.log(16) + mpmath.log(_phi()) / 2 + c3), "4.68e13")
    inst4 = LinearFormInstance(
        s=3, d_L=2, D=1,
        B=(_pr(lambda: 2 * mpmath.log(10)), _pr(lambda: mpmath.log(_phi())), _pr(lambda: 2 * h3)),
        label="Lambda4",
        eta_descriptions=("10", "phi", "(a 10^l - a + b)(phi+2)/18"),
    )
    base4 = matveev_bound(inst4)
    c4 = _step(c2, steps, "Lambda4 coefficient",
               _pr(lambda: base4.expr() * mpf(2.4)), "4.83e26")
    k2 = _step(c2, steps, "k bound coefficient (case 2)",
               _pr(lambda: 2 * c4 / mpmath.log(_phi())), "2.1e27")
    S2 = _step(c2, steps, "case 2 S", _pr(lambda: _mpf(NK_FINAL) * k2 ** 8), "5.1e248")
    n2 = sanchez_bound(21, _pr(lambda: S2))
    _step(c2, steps, "case 2 n", n2, "8.82e312")
    c2.value = n2
    return {"case1": c1, "case2": c2}


def absolute_bound_n() -> PrecReal:
    """Larger of the two case bounds (about 8.81e312)."""
    cases = absolute_bound_cases()
    for rep in cases.values():
        if not rep.ok:
            bad = [c for c, h in rep.checks if not h]
            raise CertificationError(f"{rep.stage} chain check failed: {bad}")
    a, b = cases["case1"].value, cases["case2"].value
    return b if certify_less(a, b) else a


def absolute_bound_report() -> BoundReport:
    cases = absolute_bound_cases()
    value = absolute_bound_n()
    rep = BoundReport("absolute", "n < max(case 1, case 2)", value,
                      inputs={"case1": round_up(cases["case1"].value),
                              "case2": round_up(cases["case2"].value)})
    for c in cases.values():
        rep.checks.extend(c.checks)
    return rep


def relative_gap(value, printed: str) -> float:
    """|value / printed - 1|."""
    v = value.best if isinstance(value, PrecReal) else _mpf(value)
    with mp.workprec(BOUND_PREC):
        return float(abs(v / _mpf(Fraction(printed)) - 1))


__all__ = [
    "LinearFormInstance", "BoundReport", "HeightBound", "matveev_constant",
    "matveev_bound", "deweger_factor", "deweger_transfer", "sanchez_bound",
    "bound_n_in_k", "height_eta3_lambda1", "lm_window", "lambda1_pipeline",
    "lambda2_pipeline", "n_in_k_pipeline", "absolute_bound_cases",
    "absolute_bound_n", "absolute_bound_report", "round_up", "relative_gap",
    "lambda1_height_chain", "lambda1_instance", "lambda3_constant",
]
