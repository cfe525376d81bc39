import pytest
from hypothesis import given, strategies as st

from pellrep.repdigits import (
    RepdigitConcat,
    compose,
    decompose,
    describe,
    digit_runs,
    is_two_run,
    repdigit,
)

concat = st.builds(RepdigitConcat, st.integers(1, 9), st.integers(1, 30),
                   st.integers(0, 9), st.integers(1, 30))


def brute_decompose(n):
    # try every (a, l, b, m) whose length matches
    s = str(n)
    out = []
    for l in range(1, len(s)):
        m = len(s) - l
        for a in range(1, 10):
            for b in range(10):
                if compose(RepdigitConcat(a, l, b, m)) == n:
                    out.append(RepdigitConcat(a, l, b, m))
    return sorted(out)


@given(concat)
def test_roundtrip(c):
    n = compose(c)
    assert c in decompose(n)
    assert len(str(n)) == c.l + c.m


@given(st.integers(1, 10**7))
def test_decompose_matches_brute_force(n):
    assert sorted(decompose(n)) == brute_decompose(n)


@given(st.integers(1, 10**12))
def test_two_run_iff_decomposable_or_single(n):
    assert is_two_run(n) == (n < 10 or bool(decompose(n)))


def test_examples():
    assert decompose(662) == [RepdigitConcat(6, 2, 2, 1)]
    assert len(decompose(222)) == 2
    assert not is_two_run(754)
    assert digit_runs(288) == [(2, 1), (8, 2)]
    assert repdigit(7, 3) == 777
    d = describe(6)
    assert d["degenerate"] and d["two_run"] and d["decompositions"] == []
    assert RepdigitConcat(4, 1, 4, 2).pure


@pytest.mark.parametrize("args", [(0, 1, 1, 1), (10, 1, 1, 1), (1, 0, 1, 1), (1, 1, 10, 1), (1, 1, 1, 0)])
def test_validation(args):
    with pytest.raises(ValueError):
        RepdigitConcat(*args)


def test_non_positive_rejected():
    with pytest.raises(ValueError):
        decompose(0)
    with pytest.raises(ValueError):
        is_two_run(-5)
