import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mpf

from pellrep.numerics import certified_sign, eval_at_precision
from pellrep.reduction import (
    REFERENCE_A,
    DegenerateShift,
    ReductionFailed,
    ReductionInstance,
    brute_force_violations,
    convergents,
    derived_A,
    dujella_petho,
    expand_cf,
    gamma1_instance,
    gamma2_instance,
    gamma3_instance,
    gamma4_instance,
    nearest_int_distance,
    rational_quotients,
    sample_k_values,
    single_instance,
    tau_expansion,
)


def test_rational_cf_exact():
    cf = expand_cf(Fraction(415, 93), 10)
    assert cf.exact and cf.quotients == [4, 2, 6, 7]
    assert cf.convergents[-1] == (415, 93)


@given(st.fractions(min_value=Fraction(1, 1000), max_value=1000))
def test_rational_cf_roundtrip(x):
    qs = rational_quotients(x.numerator, x.denominator)
    p, q = convergents(qs)[-1]
    assert Fraction(p, q) == x


def test_known_expansions():
    assert expand_cf(lambda: mpmath.sqrt(2), 40).quotients == [1] + [2] * 39
    phi = expand_cf(lambda: (1 + mpmath.sqrt(5)) / 2, 60)
    assert phi.quotients == [1] * 60
    e = expand_cf(lambda: mpmath.e, 12).quotients
    assert e == [2, 1, 2, 1, 1, 4, 1, 1, 6, 1, 1, 8]


def test_convergent_law():
    cf = tau_expansion(lambda: mpmath.log(10) / mpmath.log((1 + mpmath.sqrt(5)) / 2), 10 ** 40)
    with mpmath.workprec(cf.prec * 2):
        tau = cf.source.check
        for (p, q), (_, q_next) in zip(cf.convergents, cf.convergents[1:]):
            assert abs(tau * q - p) < mpf(1) / q_next


def test_nearest_int_distance():
    assert nearest_int_distance(Fraction(7, 3)) == Fraction(1, 3)
    assert nearest_int_distance(Fraction(5, 2)) == Fraction(1, 2)
    assert nearest_int_distance(-Fraction(1, 4)) == Fraction(1, 4)
    d = nearest_int_distance(eval_at_precision(lambda: mpmath.pi, 128))
    assert abs(float(d.best) - (mpmath.pi - 3)) < 1e-12


def _random_instance(rng):
    C_choice = rng.choice([2, "e", 10])
    C = {2: mpf(2), "e": mpmath.e, 10: mpf(10)}[C_choice]
    x = Fraction(rng.randint(1, 400), rng.randint(1, 97))
    while True:
        y = Fraction(rng.randint(-400, 400), rng.randint(1, 97))
        # y sqrt 2 lies in Z tau + Z only when y / x is an integer
        if y != 0 and (y / x).denominator != 1:
            break
    A = rng.randint(1, 100)
    M = rng.randint(1, 1000)
    tau = lambda: mpf(x.numerator) / x.denominator * mpmath.sqrt(2)
    mu = lambda: mpf(y.numerator) / y.denominator * mpmath.sqrt(2)
    Cf = (lambda: mpmath.e) if C_choice == "e" else C_choice
    return ReductionInstance(tau, mu, A, Cf, M, "random"), (tau, mu, A, C)


@pytest.mark.parametrize("seed", range(15))
def test_small_instances_against_brute_force(seed):
    rng = random.Random(seed)
    inst, (tau, mu, A, C) = _random_instance(rng)
    res = dujella_petho(inst)
    assert certified_sign(res.epsilon) > 0
    assert res.q > 6 * inst.M
    with mpmath.workprec(400):
        bad = brute_force_violations(tau(), mu(), mpf(A), C, inst.M, res.t_bound.best,
                                     int(2 * res.t_bound.best) + 1)
    assert bad == []


def test_epsilon_stable_under_doubling():
    inst = gamma3_instance(4, 10 ** 20)
    res = dujella_petho(inst)
    assert certified_sign(res.epsilon.at(2 * res.prec)) == 1


def test_deterministic():
    a = dujella_petho(gamma3_instance(7, 10 ** 30)).to_dict()
    b = dujella_petho(gamma3_instance(7, 10 ** 30)).to_dict()
    assert a == b


def test_shift_in_lattice_is_rejected():
    tau = lambda: mpmath.sqrt(2)
    with pytest.raises(DegenerateShift):
        dujella_petho(ReductionInstance(tau, lambda: mpf(0), 10, 2, 50, "zero"))
    with pytest.raises(ReductionFailed):
        dujella_petho(ReductionInstance(tau, lambda: 3 * mpmath.sqrt(2) + 1, 10, 2, 50, "lattice"),
                      scan_limit=20)


def test_derived_constants():
    for lab in ("gamma1", "gamma2", "gamma3"):
        assert derived_A(lab) <= REFERENCE_A[lab]
    # the printed 92.22 is just below 44.378 / log phi = 92.221
    assert derived_A("gamma4") == Fraction("92.23")


def test_invalid_instance():
    with pytest.raises(ValueError):
        ReductionInstance(lambda: mpmath.sqrt(2), lambda: mpf(1) / 3, 1, 1, 10)
    with pytest.raises(ValueError):
        ReductionInstance(lambda: mpmath.sqrt(2), lambda: mpf(1) / 3, 1, 2, 0)


def test_headline_instances():
    _, r3 = single_instance("gamma3", a=1)
    assert r3.t_bound.best <= 750
    _, r4 = single_instance("gamma4", a=1, b=0, l=5)
    assert r4.t_bound.best < 1584
    _, r1 = single_instance("gamma1", k=2, a=3)
    assert r1.t_bound.best < mpf("89.14")


def test_k2_homogeneous_cases():
    M = 10 ** 56
    assert gamma1_instance(2, 9, M).homogeneous
    assert not gamma1_instance(3, 9, M).homogeneous
    g = gamma2_instance(2, 9, 9, 4, M)
    assert g.homogeneous and g.M == M + 4
    assert gamma2_instance(2, 1, 0, 1, M).homogeneous
    assert not gamma2_instance(2, 1, 1, 1, M).homogeneous
    # gamma1 bounds l (below 89), gamma2 bounds n (below 250)
    assert dujella_petho(gamma1_instance(2, 9, M)).t_bound.best < 89
    assert dujella_petho(g).t_bound.best < 250


def test_homogeneous_claim_k2():
    # (2 gamma - 2) g_2(gamma) = 1 for gamma = 1 + sqrt 2
    with mpmath.workprec(300):
        g = 1 + mpmath.sqrt(2)
        gk = (g - 1) / (3 * g * g - 6 * g + 1)
        assert abs((2 * g - 2) * gk - 1) < mpf(10) ** -80


def test_gamma4_instance_fields():
    inst = gamma4_instance(3, 4, 2, 10 ** 10)
    assert inst.params == {"a": 3, "b": 4, "l": 2}


def test_sample_k_values():
    ks = sample_k_values(550, 100, 50, seed=1)
    assert ks[:99] == list(range(2, 101))
    assert len(ks) == 149 and all(100 < k <= 550 for k in ks[99:])
    assert ks == sample_k_values(550, 100, 50, seed=1)
