"""Continued fractions and the Dujella-Petho reduction.

Given an irrational tau, a shift mu and constants A > 0, C > 1, M >= 1,
choose a convergent p/q of tau with q > 6M and put

    eps = ||mu q|| - M ||tau q||.

If eps > 0, no integers r <= M, s, t satisfy

    0 < |r tau - s + mu| < A C^(-t)   with   t >= log(A q / eps) / log C.

:func:`reduce_chain` replays the sequence of such reductions that shrinks
the absolute bound on n to a few hundred.
"""

from __future__ import annotations

import logging
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable

import mpmath
from mpmath import mp, mpf

from . import __version__
from .baker import (
    absolute_bound_n,
    bound_n_in_k,
    deweger_factor,
    round_up,
)
from .numerics import (
    GUARD_BITS,
    MAX_PRECISION,
    CertificationError,
    PrecReal,
    PrecisionExhausted,
    as_precreal,
    certified_sign,
    certify_less,
    eval_at_precision,
)
from .sequences import _gamma_at

log = logging.getLogger(__name__)

SCAN_LIMIT = 200

# bounds on n used as M, as carried by the argument, and the reference results
M_ABSOLUTE = Fraction("8.82e312")
M_K3200 = Fraction("5.1e62")
M_K550 = Fraction("1.13e56")
REFERENCE_A = {"gamma1": Fraction("18.15"), "gamma2": Fraction("8.37"),
           "gamma3": Fraction("178.92"), "gamma4": Fraction("92.22")}
REFERENCE_RESULTS = {"i": "744.38", "ii": "1584", "iii": "154.342", "iv": "89.14", "v": "219.568"}


class ReductionFailed(CertificationError):
    """No convergent in the scanned window gave a positive epsilon."""


class DegenerateShift(CertificationError):
    """||mu q|| vanishes to working precision; the reduction does not apply."""


# continued fractions --------------------------------------------------------

def _dyadic(x: mpf) -> tuple[int, int]:
    man, exp = x.man_exp
    if exp >= 0:
        return man << exp, 1
    return man, 1 << -exp


def rational_quotients(num: int, den: int, limit: int | None = None) -> list[int]:
    """Partial quotients of num/den by the Euclidean algorithm."""
    if den == 0:
        raise ZeroDivisionError("zero denominator")
    if den < 0:
        num, den = -num, -den
    out = []
    while den and (limit is None or len(out) < limit):
        a, r = divmod(num, den)
        out.append(a)
        num, den = den, r
    return out


def convergents(quotients: Iterable[int]) -> list[tuple[int, int]]:
    p0, p1, q0, q1 = 0, 1, 1, 0
    out = []
    for a in quotients:
        p0, p1 = p1, a * p1 + p0
        q0, q1 = q1, a * q1 + q0
        out.append((p1, q1))
    return out


@dataclass
class ContinuedFraction:
    source: object
    quotients: list
    convergents: list
    prec: int | None = None
    exact: bool = False

    def __len__(self):
        return len(self.quotients)


def certified_quotients(x: PrecReal) -> list[int]:
    """Quotients on which the evaluations at p and 2p bits agree.

    The last quotient of each expansion is an artefact of truncation and is
    never counted.
    """
    a = rational_quotients(*_dyadic(x.value))[:-1]
    b = rational_quotients(*_dyadic(x.check))[:-1]
    n = 0
    for u, v in zip(a, b):
        if u != v:
            break
        n += 1
    return a[:n]


def expand_cf(x, count: int, prec: int | None = None) -> ContinuedFraction:
    """First ``count`` partial quotients and convergents of ``x``.

    Rationals (int, Fraction) are expanded exactly and may terminate early.
    PrecReal inputs and zero-argument mpmath callables are escalated until
    ``count`` quotients are certified.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        qs = rational_quotients(x.numerator, x.denominator, count)
        return ContinuedFraction(x, qs, convergents(qs), None, True)
    if callable(x) and not isinstance(x, PrecReal):
        x = eval_at_precision(x, prec)
    x = as_precreal(x, prec)
    if prec is not None and prec > x.prec:
        x = x.at(prec)
    while True:
        qs = certified_quotients(x)
        if len(qs) >= count:
            qs = qs[:count]
            return ContinuedFraction(x, qs, convergents(qs), x.prec)
        if 2 * x.prec > MAX_PRECISION:
            raise PrecisionExhausted(f"only {len(qs)} of {count} quotients certified")
        x = x.at(2 * x.prec)


def nearest_int_distance(x):
    """||x||, the distance from x to the nearest integer, in [0, 1/2]."""
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        return abs(x - round(x)) if x - math.floor(x) != Fraction(1, 2) else Fraction(1, 2)
    x = as_precreal(x)
    e = x.expr
    return eval_at_precision(lambda: _dist(e()), x.prec)


def _dist(v: mpf) -> mpf:
    return abs(v - mpmath.nint(v))


# the reduction ----------------------------------------------------------------

@dataclass
class ReductionInstance:
    """Data for one reduction step.

    ``tau_hat`` and ``mu_hat`` are PrecReal values or zero-argument mpmath
    callables; ``C`` is a number or a PrecReal.
    """

    tau_hat: object
    mu_hat: object
    A: object
    C: object
    M: int
    label: str = ""
    params: dict = field(default_factory=dict)
    tau_desc: str = ""
    mu_desc: str = ""
    homogeneous: bool = False

    def __post_init__(self):
        self.M = int(self.M)
        if self.M < 1:
            raise ValueError("M must be >= 1")
        # a sanity check only; the bound itself is evaluated at full precision
        with mp.workprec(64):
            if not _as_expr(self.A)() > 0:
                raise ValueError("A must be > 0")
            if not _as_expr(self.C)() > 1:
                raise ValueError("C must be > 1")


@dataclass
class ReductionResult:
    q: int
    p: int
    convergent_index: int
    epsilon: PrecReal
    t_bound: PrecReal
    prec: int
    scanned: int

    def to_dict(self) -> dict:
        return {
            "q": str(self.q),
            "convergent_index": self.convergent_index,
            "epsilon": self.epsilon.digits(12),
            "bound": self.t_bound.digits(12),
            "precision_bits": self.prec,
            "scanned": self.scanned,
        }


def _as_number(v):
    if callable(v) and not isinstance(v, PrecReal):
        return eval_at_precision(v, 128)
    return v


def _as_expr(v) -> Callable[[], mpf]:
    if isinstance(v, PrecReal):
        return v.expr
    if callable(v):
        return v
    return as_precreal(v).expr


def required_precision(M: int) -> int:
    # ||tau q|| must be resolved at q ~ 6M and then scaled by M
    return 2 * (6 * M).bit_length() + 192


def tau_expansion(tau, M: int, prec: int | None = None) -> ContinuedFraction:
    """Certified quotients of tau reaching past q > 6M with room to scan."""
    p = max(prec or 0, required_precision(M))
    x = eval_at_precision(_as_expr(tau), p, escalate=False)
    while True:
        qs = certified_quotients(x)
        conv = convergents(qs)
        first = next((i for i, (_, q) in enumerate(conv) if q > 6 * M), None)
        if first is not None and len(conv) > first + 8:
            return ContinuedFraction(x, qs, conv, x.prec)
        if 2 * x.prec > MAX_PRECISION:
            raise PrecisionExhausted("cannot expand tau past 6M")
        x = x.at(2 * x.prec)


def _scan_start(cf: ContinuedFraction, bound: int) -> int:
    cache = cf.__dict__.setdefault("_start", {})
    if bound not in cache:
        cache[bound] = next(i for i, (_, q) in enumerate(cf.convergents) if q > bound)
    return cache[bound]


def _tau_distances(cf: ContinuedFraction, i: int) -> tuple[mpf, mpf]:
    """||q_i tau|| at the expansion's two precisions, cached per convergent."""
    cache = cf.__dict__.setdefault("_tau_dist", {})
    if i not in cache:
        q = cf.convergents[i][1]
        x = cf.source
        with mp.workprec(x.prec):
            v = _dist(q * x.value)
        with mp.workprec(2 * x.prec):
            c = _dist(q * x.check)
        cache[i] = (v, c)
    return cache[i]


def dujella_petho(inst: ReductionInstance, cf: ContinuedFraction | None = None,
                  scan_limit: int = SCAN_LIMIT) -> ReductionResult:
    """Reduce one instance, scanning convergents with q > 6M until eps > 0."""
    M = inst.M
    if cf is None or cf.exact or cf.prec < required_precision(M):
        cf = tau_expansion(inst.tau_hat, M)
    if inst.homogeneous:
        return legendre_bound(inst, cf)
    prec = cf.prec
    tau, mu = _as_expr(inst.tau_hat), _as_expr(inst.mu_hat)
    A = _as_expr(inst.A)
    C = _as_expr(inst.C)
    mu_pr = eval_at_precision(mu, prec, escalate=False)
    scanned = 0
    zero_shift = 0
    i = _scan_start(cf, 6 * M)
    while scanned < scan_limit:
        if i >= len(cf.convergents):
            cf = tau_expansion(inst.tau_hat, M, 2 * cf.prec)
            prec = cf.prec
            mu_pr = eval_at_precision(mu, prec, escalate=False)
        p, q = cf.convergents[i]
        scanned += 1
        tv, tc = _tau_distances(cf, i)
        with mp.workprec(prec):
            dv = _dist(q * mu_pr.value)
            ev = dv - M * tv
        with mp.workprec(2 * prec):
            dc = _dist(q * mu_pr.check)
            ec = dc - M * tc
        eps = PrecReal(lambda q=q: _dist(q * mu()) - M * _dist(q * tau()), prec, ev, ec)
        s = certified_sign(eps)
        if s == 0:
            eps = eps.at(2 * prec)
            s = certified_sign(eps)
        if s > 0:
            e = eps.expr
            vals = []
            for wp, ew in ((eps.prec, eps.value), (2 * eps.prec, eps.check)):
                with mp.workprec(wp):
                    vals.append(mpmath.log(A() * q / ew) / mpmath.log(C()))
            t = PrecReal(lambda: mpmath.log(A() * q / e()) / mpmath.log(C()),
                         eps.prec, *vals)
            return ReductionResult(q, p, i, eps, t, prec, scanned)
        if certified_sign(PrecReal(None, prec, dv, dc)) == 0:
            zero_shift += 1
            if zero_shift >= 3:
                raise DegenerateShift(
                    f"{inst.label}: ||mu q|| vanishes to working precision")
        i += 1
    raise ReductionFailed(
        f"{inst.label}: no positive epsilon in {scan_limit} convergents past q > 6M; "
        "extend the expansion or check whether mu lies in Z tau + Z")


def legendre_bound(inst: ReductionInstance, cf: ContinuedFraction) -> ReductionResult:
    """Homogeneous case (mu an integer): for 0 < r <= M < q_N,
    |r tau - s| >= |q_(N-1) tau - p_(N-1)| > 1 / (2 q_N),
    so A C^(-t) > 1/(2 q_N) gives t < log(2 A q_N) / log C."""
    i = _scan_start(cf, inst.M)
    p, q = cf.convergents[i]
    A, C = _as_expr(inst.A), _as_expr(inst.C)
    prec = max(cf.prec or 0, required_precision(inst.M))
    t = eval_at_precision(lambda: mpmath.log(2 * A() * q) / mpmath.log(C()), prec)
    return ReductionResult(q, p, i, PrecReal.exact(0, prec), t, prec, 1)


def brute_force_violations(tau: mpf, mu: mpf, A: mpf, C: mpf, M: int,
                           t_bound: mpf, t_max: int | None = None) -> list[tuple[int, int, int]]:
    """All (r, s, t) with 1 <= r <= M, t_bound <= t <= t_max and
    0 < |r tau - s + mu| < A C^(-t). Used as an oracle for small M."""
    t_lo = max(1, int(mpmath.ceil(t_bound)))
    t_hi = t_max if t_max is not None else max(t_lo, int(2 * mpmath.ceil(t_bound)) + 1)
    out = []
    for r in range(1, M + 1):
        v = r * tau + mu
        base = int(mpmath.floor(v))
        for s in (base - 1, base, base + 1, base + 2):
            d = abs(v - s)
            if d == 0:
                continue
            for t in range(t_lo, t_hi + 1):
                if d < A * C ** (-t):
                    out.append((r, s, t))
                else:
                    break
    return out


# instances of the chain -------------------------------------------------------

def _phi() -> mpf:
    return (1 + mpmath.sqrt(5)) / 2


@lru_cache(maxsize=64)
def _golden_consts(prec: int) -> tuple[mpf, mpf, mpf]:
    with mp.workprec(prec + GUARD_BITS):
        lp = mpmath.log(_phi())
        return +lp, mpmath.log(10) / lp, mpmath.log((_phi() + 2) / 18)


@lru_cache(maxsize=4096)
def _gamma_consts(k: int, prec: int) -> tuple[mpf, mpf, mpf]:
    g = _gamma_at(k, prec + GUARD_BITS)
    with mp.workprec(prec + GUARD_BITS):
        lg = mpmath.log(g)
        gk = (g - 1) / ((k + 1) * g * g - 3 * k * g + k - 1)
        return lg, mpmath.log(10) / lg, mpmath.log(9 * (2 * g - 2) * gk)


@lru_cache(maxsize=None)
def derived_A(label: str) -> Fraction:
    """A for each instance, from the bound on |Lambda|, de Weger's factor
    and the logarithm divided out, rounded up to four significant digits."""
    lam, a, div = {
        "gamma1": ("11.8", "0.12", lambda: mpmath.log(2)),
        "gamma2": ("5.5", "0.1", lambda: mpmath.log(2)),
        "gamma3": ("57.5", "0.58", lambda: mpmath.log(_phi())),
        "gamma4": ("42.12", "0.1", lambda: mpmath.log(_phi())),
    }[label]
    fac = deweger_factor(Fraction(a))
    f = fac.expr
    val = eval_at_precision(lambda: mpf(lam) * f() / div(), 256)
    return Fraction(round_up(val, 4))


def gamma1_instance(k: int, a: int, M: int) -> ReductionInstance:
    def tau():
        return _gamma_consts(k, mp.prec)[1]

    def mu():
        lg, _, l0 = _gamma_consts(k, mp.prec)
        return (l0 - mpmath.log(a)) / lg

    # for k = 2, (2 gamma - 2) g_2(gamma) = (gamma - 1)^2 / 2 = 1 exactly,
    # so a = 9 gives mu = 0
    return ReductionInstance(
        tau, mu, derived_A("gamma1"), 10, M, "gamma1", {"k": k, "a": a},
        "log 10 / log gamma", "log(9(2gamma-2)g_k(gamma)/a) / log gamma",
        homogeneous=(k == 2 and a == 9))


def gamma2_instance(k: int, a: int, b: int, l: int, M: int) -> ReductionInstance:
    N = a * 10 ** l - a + b

    def tau():
        return _gamma_consts(k, mp.prec)[1]

    def mu():
        lg, _, l0 = _gamma_consts(k, mp.prec)
        return (mpmath.log(N) - l0) / lg

    def C():
        return _gamma_at(k, mp.prec)

    # for k = 2 the coefficient is 1/9, so N = 9 * 10^j makes mu = j tau and
    # the form (r + j) tau - s is homogeneous with r + j <= M + j
    j = _nine_times_power_of_ten(N) if k == 2 else None
    return ReductionInstance(
        tau, mu, derived_A("gamma2"), C, M if j is None else M + j, "gamma2",
        {"k": k, "a": a, "b": b, "l": l},
        "log 10 / log gamma",
        "log((a 10^l - a + b) / (9(2gamma-2)g_k(gamma))) / log gamma",
        homogeneous=j is not None)


def _nine_times_power_of_ten(N: int) -> int | None:
    if N % 9:
        return None
    s = str(N // 9)
    if s[0] == "1" and set(s[1:]) <= {"0"}:
        return len(s) - 1
    return None


def golden_tau():
    return _golden_consts(mp.prec)[1]


def gamma3_instance(a: int, M: int) -> ReductionInstance:
    def mu():
        lp, _, c = _golden_consts(mp.prec)
        return (mpmath.log(a) + c) / lp

    return ReductionInstance(
        golden_tau, mu, derived_A("gamma3"), lambda: mpmath.e, M, "gamma3", {"a": a},
        "log 10 / log phi", "log(a(phi+2)/18) / log phi")


def gamma4_instance(a: int, b: int, l: int, M: int) -> ReductionInstance:
    N = a * 10 ** l - a + b

    def mu():
        lp, _, c = _golden_consts(mp.prec)
        return (mpmath.log(N) + c) / lp

    return ReductionInstance(
        golden_tau, mu, derived_A("gamma4"), _phi, M, "gamma4", {"a": a, "b": b, "l": l},
        "log 10 / log phi", "log((a 10^l - a + b)(phi+2)/18) / log phi")


def _shift_triples(l_max: int):
    """(a, b, l) with distinct a 10^l - a + b, first occurrence kept."""
    seen = set()
    for l in range(1, l_max + 1):
        for a in range(1, 10):
            for b in range(10):
                N = a * 10 ** l - a + b
                if N not in seen:
                    seen.add(N)
                    yield a, b, l


# chain -----------------------------------------------------------------------

@dataclass
class StageReport:
    name: str
    description: str
    M: str = ""
    result: dict = field(default_factory=dict)
    instances: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    status: str = "ok"

    def record(self, inst: ReductionInstance, res: ReductionResult) -> None:
        rec = {"label": inst.label, **inst.params, "tau": inst.tau_desc, "mu": inst.mu_desc,
               "A": str(inst.A)}
        rec.update(res.to_dict())
        if inst.homogeneous:
            rec["method"] = "legendre"
        self.instances.append(rec)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "M": self.M,
            "status": self.status,
            "result": self.result,
            "notes": self.notes,
            "instance_count": len(self.instances),
            "instances": self.instances,
        }


@dataclass
class ChainReport:
    stages: list = field(default_factory=list)
    k_cap: int = 550
    version: str = __version__
    l_bounds: dict = field(default_factory=dict)
    n_bounds: dict = field(default_factory=dict)

    def stage(self, name: str) -> StageReport:
        return next(s for s in self.stages if s.name == name)

    @property
    def conclusive(self) -> bool:
        return all(s.status == "ok" for s in self.stages)

    def to_dict(self) -> dict:
        return {
            "tool_version": self.version,
            "k_cap": self.k_cap,
            "conclusive": self.conclusive,
            "stages": [s.to_dict() for s in self.stages],
            "l_bounds": {str(k): v for k, v in sorted(self.l_bounds.items())},
            "n_bounds": {str(k): v for k, v in sorted(self.n_bounds.items())},
        }


def _run(inst: ReductionInstance, cf: ContinuedFraction, stage: StageReport,
         keep: bool = True) -> ReductionResult | None:
    try:
        res = dujella_petho(inst, cf)
    except CertificationError as exc:
        stage.status = "inconclusive"
        stage.notes.append(f"{inst.label} {inst.params}: {exc}")
        return None
    if keep:
        stage.record(inst, res)
    return res


def _max_bound(results) -> mpf:
    return max(r.t_bound.best for r in results if r is not None)


def _floor(x: mpf) -> int:
    return int(mpmath.floor(x))


def golden_stage(name: str, M: int, l_max: int | None, progress=None) -> tuple[StageReport, mpf, mpf | None]:
    """Gamma3 over a in 1..9, then (if l_max) Gamma4 over all shifts."""
    st = StageReport(name, "", str(M))
    cf = tau_expansion(golden_tau, M)
    res3 = [_run(gamma3_instance(a, M), cf, st) for a in range(1, 10)]
    w = _max_bound(res3) if all(res3) else None
    t4 = None
    if l_max is not None:
        if progress:
            progress(f"stage {name}: gamma4 over l <= {l_max}")
        res4 = [_run(gamma4_instance(a, b, l, M), cf, st) for a, b, l in _shift_triples(l_max)]
        t4 = _max_bound(res4) if all(res4) else None
    return st, w, t4


def _k_stage_worker(args):
    return _k_stage(*args)


def _k_stage(k: int, M: int, gamma2: bool = True, record_all: bool = False) -> dict:
    """Gamma1 for a in 1..9, then Gamma2 over l up to the Gamma1 bound."""
    st = StageReport(f"k{k}", "")
    inst0 = gamma1_instance(k, 1, M)
    cf = tau_expansion(inst0.tau_hat, M)
    r1 = [_run(gamma1_instance(k, a, M), cf, st) for a in range(1, 10)]
    out = {"k": k, "gamma1": list(st.instances), "notes": list(st.notes)}
    if not all(r1):
        out["status"] = "inconclusive"
        return out
    l_bound = _floor(_max_bound(r1))
    out["l_bound"] = l_bound
    out["l_bound_value"] = mpmath.nstr(_max_bound(r1), 10)
    if not gamma2:
        out["status"] = "ok"
        return out
    st2 = StageReport(f"k{k}-gamma2", "")
    worst, worst_inst, min_eps, count = None, None, None, 0
    for a, b, l in _shift_triples(max(l_bound, 1)):
        inst = gamma2_instance(k, a, b, l, M)
        res = _run(inst, cf, st2, keep=record_all)
        count += 1
        if res is None:
            continue
        if worst is None or res.t_bound.best > worst.t_bound.best:
            worst, worst_inst = res, inst
        if inst.homogeneous:
            continue
        if min_eps is None or res.epsilon.best < min_eps:
            min_eps = res.epsilon.best
    out["gamma2_instances"] = count
    if record_all:
        out["gamma2_all"] = list(st2.instances)
        st2.instances.clear()
    out["notes"] += st2.notes
    if st2.status != "ok" or worst is None:
        out["status"] = "inconclusive"
        return out
    out["n_bound_value"] = mpmath.nstr(worst.t_bound.best, 10)
    out["n_bound"] = _floor(worst.t_bound.best)
    out["gamma2_min_epsilon"] = mpmath.nstr(min_eps, 6)
    st2.record(worst_inst, worst)
    out["gamma2_worst"] = st2.instances[0]
    out["status"] = "ok"
    return out


def default_k_values(k_cap: int) -> list[int]:
    return list(range(2, k_cap + 1))


def sample_k_values(k_cap: int = 550, exhaustive_to: int = 100, extra: int = 50,
                    seed: int = 0) -> list[int]:
    """All k <= exhaustive_to plus ``extra`` random k in (exhaustive_to, k_cap]."""
    rng = random.Random(seed)
    pool = list(range(exhaustive_to + 1, k_cap + 1))
    return list(range(2, exhaustive_to + 1)) + sorted(rng.sample(pool, min(extra, len(pool))))


def _to_int(x) -> int:
    f = Fraction(x)
    return -(-f.numerator // f.denominator)


def reduce_chain(k_values: list[int] | None = None, gamma2: bool = True,
                 workers: int = 1, progress: Callable[[str], None] | None = None,
                 record_all: bool = False) -> ChainReport:
    """Replay the full reduction.

    (i)   Gamma3 with M = 8.82e312 bounds w = min(k/2 log phi, l log 10).
    (ii)  For k >= 3200, w = l log 10; Gamma4 over those l bounds k.
    (iii) With M = 5.1e62, Gamma3 and Gamma4 again bound l and k. The cap on
          k is iterated with M = bound_n_in_k(cap) until it stops shrinking.
    (iv)  Gamma1 per k bounds l.
    (v)   Gamma2 per k and shift bounds n.

    ``k_values`` restricts stages (iv) and (v); the default is every k up to
    the cap established in (iii). Stage (v) keeps the worst instance per k
    unless ``record_all`` is set.
    """
    say = progress or (lambda msg: None)
    report = ChainReport()
    log_phi = mpmath.log(_phi())
    log10 = mpmath.log(10)

    # (i)
    M0 = _to_int(M_ABSOLUTE)
    computed = absolute_bound_n()
    say("stage i: gamma3 with M = 8.82e312")
    st1, w1, _ = golden_stage("i", M0, None, progress)
    st1.description = "Gamma3 over a = 1..9; bounds w = min(k/2 log phi, l log 10)"
    st1.notes.append(f"absolute bound on n recomputed as {round_up(computed)} <= 8.82e312: "
                     f"{certify_less(computed, M_ABSOLUTE)}")
    report.stages.append(st1)
    if w1 is None:
        return report
    st1.result = {"w_bound": mpmath.nstr(w1, 10), "reference": REFERENCE_RESULTS["i"]}

    # (ii)
    say("stage ii: gamma4 with M = 8.82e312")
    l_max = _floor(w1 / log10)
    st2, _, t4 = golden_stage("ii", M0, l_max, progress)
    st2.instances = [r for r in st2.instances if r["label"] == "gamma4"]
    st2.description = "k >= 3200 forces w = l log 10; Gamma4 over (a, b, l) bounds k"
    report.stages.append(st2)
    if t4 is not None:
        k_bound = 2 * t4
        st2.result = {"l_max": l_max, "half_k_bound": mpmath.nstr(t4, 10),
                      "k_bound": mpmath.nstr(k_bound, 10), "reference": REFERENCE_RESULTS["ii"],
                      "k_lt_3200": bool(k_bound < 3200)}
        if not (1600 * log_phi > w1):
            st2.status = "inconclusive"
            st2.notes.append("k >= 3200 does not force w = l log 10")
        if not k_bound < 3200:
            st2.status = "inconclusive"

    # (iii)
    say("stage iii: gamma3 and gamma4 with M = 5.1e62")
    st3 = StageReport("iii", "550 < k < 3200: Gamma3 then Gamma4 with M = 5.1e62; "
                             "k cap iterated with M = bound_n_in_k(cap)")
    report.stages.append(st3)
    M1 = _to_int(M_K3200)
    st3.M = str(M1)
    st3.notes.append(f"bound_n_in_k(3200) = {round_up(bound_n_in_k(3200))} <= 5.1e62: "
                     f"{certify_less(bound_n_in_k(3200), M_K3200)}")
    sub, w3, t43 = golden_stage("iii", M1, None, progress)
    st3.instances += sub.instances
    if w3 is None:
        st3.status = "inconclusive"
        return report
    l3 = _floor(w3 / log10)
    sub, _, t43 = golden_stage("iii", M1, l3, progress)
    st3.instances += [r for r in sub.instances if r["label"] == "gamma4"]
    if t43 is None:
        st3.status = "inconclusive"
        return report
    # w = k/2 log phi gives k < 2 w / log phi; w = l log 10 gives k < 2 t4 via Gamma4
    cap = max(_floor(2 * w3 / log_phi), _floor(2 * t43))
    history = [cap]
    st3.result = {"w_bound": mpmath.nstr(w3, 10), "l_max": l3, "reference": REFERENCE_RESULTS["iii"],
                  "k_branch_bound": mpmath.nstr(2 * w3 / log_phi, 10),
                  "gamma4_k_bound": mpmath.nstr(2 * t43, 10)}
    while cap > 550:
        Mc = _to_int(Fraction(round_up(bound_n_in_k(cap), 3)))
        say(f"stage iii: iterating k cap {cap} with M = {round_up(Mc, 3)}")
        sub, wc, _ = golden_stage("iii", Mc, None, progress)
        st3.instances += sub.instances
        if wc is None:
            st3.status = "inconclusive"
            return report
        lc = _floor(wc / log10)
        sub, _, t4c = golden_stage("iii", Mc, lc, progress)
        st3.instances += [r for r in sub.instances if r["label"] == "gamma4"]
        if t4c is None:
            st3.status = "inconclusive"
            return report
        new_cap = max(_floor(2 * wc / log_phi), _floor(2 * t4c), 550)
        if new_cap >= cap:
            break
        cap = new_cap
        history.append(cap)
    report.k_cap = max(cap, 550)
    st3.result["k_cap_history"] = history
    st3.result["k_cap"] = report.k_cap
    st3.result["k_le_550_established"] = report.k_cap <= 550
    if report.k_cap > 550:
        st3.notes.append(
            f"w < {mpmath.nstr(w3, 8)} leaves the branch w = (k/2) log phi open for "
            f"k < {mpmath.nstr(2 * w3 / log_phi, 6)}; k <= 550 does not follow. "
            f"Stages iv and v run up to k = {report.k_cap} instead.")

    # (iv) and (v)
    if report.k_cap <= 550:
        M2 = _to_int(M_K550)
    else:
        M2 = _to_int(Fraction(round_up(bound_n_in_k(report.k_cap), 3)))
    ks = default_k_values(report.k_cap) if k_values is None else sorted(k_values)
    st4 = StageReport("iv", f"Gamma1 for each k, a = 1..9", str(M2))
    st5 = StageReport("v", f"Gamma2 for each k and shift (a, b, l <= per-k l bound)", str(M2))
    report.stages += [st4, st5]
    per_k = []
    jobs = [(k, M2, gamma2, record_all) for k in ks]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for out in pool.map(_k_stage_worker, jobs):
                per_k.append(out)
                say(f"stage iv/v: k = {out['k']} done")
    else:
        for job in jobs:
            out = _k_stage_worker(job)
            per_k.append(out)
            say(f"stage iv/v: k = {out['k']} done")
    l_bounds, n_bounds = {}, {}
    for out in per_k:
        st4.instances += out["gamma1"]
        if "l_bound" in out:
            l_bounds[out["k"]] = out["l_bound"]
        if "n_bound" in out:
            n_bounds[out["k"]] = out["n_bound"]
            st5.instances.append({"k": out["k"], "instances": out["gamma2_instances"],
                                  "n_bound": out["n_bound_value"],
                                  "min_epsilon": out["gamma2_min_epsilon"],
                                  "worst": out["gamma2_worst"],
                                  **({"all": out["gamma2_all"]} if record_all else {})})
        if out["status"] != "ok":
            for st in (st4, st5):
                st.status = "inconclusive"
            st4.notes += out["notes"]
    st4.result = {"k_values": len(ks), "l_max": max(l_bounds.values(), default=None),
                  "reference": REFERENCE_RESULTS["iv"]}
    if gamma2:
        st5.result = {"k_values": len(ks), "n_max": max(n_bounds.values(), default=None),
                      "reference": REFERENCE_RESULTS["v"],
                      "contradicts_n_gt_250": bool(n_bounds) and max(n_bounds.values()) <= 250}
        if not st5.result["contradicts_n_gt_250"]:
            st5.status = "inconclusive"
    else:
        st5.status = "skipped"
    st5.notes.append("mu for Gamma2 uses log((a 10^l - a + b) / (9(2gamma-2)g_k(gamma))); "
                     "the printed display reuses the Gamma1 shift log(9(2gamma-2)g_k(gamma)/a)")
    st5.notes.append("k = 2 shifts with a 10^l - a + b = 9 * 10^j are homogeneous "
                     "and use the Legendre bound")
    report.l_bounds = l_bounds
    report.n_bounds = n_bounds
    return report


def single_instance(name: str, k: int | None = None, a: int = 1, b: int = 0,
                    l: int = 1, M=None) -> tuple[ReductionInstance, ReductionResult]:
    """Build and reduce one named instance with the chain's default M."""
    if name == "gamma3":
        inst = gamma3_instance(a, _to_int(M or M_ABSOLUTE))
    elif name == "gamma4":
        inst = gamma4_instance(a, b, l, _to_int(M or M_ABSOLUTE))
    elif name == "gamma1":
        inst = gamma1_instance(k or 2, a, _to_int(M or M_K550))
    elif name == "gamma2":
        inst = gamma2_instance(k or 2, a, b, l, _to_int(M or M_K550))
    else:
        raise ValueError(f"unknown instance {name!r}")
    return inst, dujella_petho(inst)
