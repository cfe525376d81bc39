import mpmath
import pytest
from fractions import Fraction
from hypothesis import given, settings, strategies as st
from mpmath import mpf

from pellrep.numerics import CertificationError, GoldenNumber, certify_less
from pellrep.sequences import (
    G_LOWER,
    G_UPPER,
    PellLucasContext,
    characteristic_poly,
    dominant_error_ok,
    dominant_root,
    fibonacci,
    g_k_at,
    golden_g_at_phi_squared,
    growth_bounds_check,
    iter_terms,
    phi_approx_term,
    phi_error_xi,
    root_interval,
    term,
    terms,
)


def naive_terms(k, n_max):
    # direct transcription of the recurrence over the full history
    seq = {i: 0 for i in range(-(k - 2), 0)}
    seq[0] = seq[1] = 2
    for n in range(2, n_max + 1):
        seq[n] = 2 * seq[n - 1] + sum(seq[n - j] for j in range(2, k + 1))
    return [seq[n] for n in range(1, n_max + 1)]


@pytest.mark.parametrize("k", [2, 3, 4, 7, 12])
def test_terms_match_naive(k):
    assert terms(k, 60) == naive_terms(k, 60)


def test_known_values():
    assert term(2, 5) == 82
    assert term(3, 7) == 662
    assert term(6, 6) == 288
    assert [v for _, v in zip(range(9), (v for _, v in iter_terms(3, -1)))] == \
        [0, 2, 2, 6, 16, 40, 102, 260, 662]


def test_term_index_guard():
    with pytest.raises(ValueError):
        term(4, -3)
    with pytest.raises(ValueError):
        term(1, 3)


@settings(max_examples=60)
@given(st.integers(2, 40), st.data())
def test_fibonacci_identity(k, data):
    n = data.draw(st.integers(1, k + 1))
    f = 2 * fibonacci(2 * n)
    if n <= k:
        assert term(k, n) == f
    else:
        # the identity breaks by exactly 2 at n = k + 1
        assert term(k, n) == f - 2


def test_gamma2_against_quadratic_formula():
    g = dominant_root(2, 256)
    with mpmath.workprec(512):
        assert abs(g.best - (1 + mpmath.sqrt(2))) < mpf(10) ** -50


@pytest.mark.parametrize("k", range(3, 21))
def test_root_straddles_and_in_interval(k):
    g = dominant_root(k, 256)
    eps = mpf(2) ** -200
    with mpmath.workprec(800):
        assert characteristic_poly(k, g.check - eps) < 0 < characteristic_poly(k, g.check + eps)
    lo, hi = root_interval(k, 256)
    assert certify_less(lo, g) and certify_less(g, hi)


def test_g_bounds_and_limit():
    for k in (2, 3, 10, 50, 200):
        ctx = PellLucasContext.create(k)
        assert certify_less(G_LOWER, ctx.g_gamma) and certify_less(ctx.g_gamma, G_UPPER)
    # g_k(phi^2) = 1/(phi + 2) exactly
    for k in (2, 5, 30):
        assert golden_g_at_phi_squared(k) == 1 / (GoldenNumber.phi() + 2)


def test_g_pole_detected():
    assert g_k_at(2, 3) == Fraction(2, 10)
    # the denominator has discriminant 5k^2 + 4 = 49 at k = 3: roots 2 and 1/4
    with pytest.raises(ZeroDivisionError):
        g_k_at(3, 2)
    with pytest.raises(ZeroDivisionError):
        g_k_at(3, Fraction(1, 4))


@pytest.mark.parametrize("k", [2, 3, 5, 9])
def test_dominant_term_within_two(k):
    ctx = PellLucasContext.create(k)
    for n in list(range(2 - k, 10)) + [50, 120]:
        assert dominant_error_ok(ctx, n)
        if n >= 1:
            assert growth_bounds_check(ctx, n)


def test_phi_approximations():
    xi = phi_error_xi(50, 40)
    assert abs(xi.best) < 1.25 * ((1 + mpmath.sqrt(5)) / 2) ** -25
    main, zeta = phi_approx_term(50, 30)
    assert abs(zeta.best) < 41 * ((1 + mpmath.sqrt(5)) / 2) ** -25
    # zeta is the relative error: Q_n = main (1 + zeta)
    with mpmath.workprec(512):
        assert abs(main.best * (1 + zeta.best) - term(50, 30)) < mpf(10) ** -20
    with pytest.raises(ValueError):
        phi_error_xi(10, 5)
