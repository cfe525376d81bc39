import pytest

from pellrep.repdigits import is_two_run
from pellrep.search import (
    ConsistencyError,
    Solution,
    expected_solutions,
    load_expected,
    solve_range,
    solve_small_n_via_fibonacci,
    verify_theorem,
    window_ok,
)
from pellrep.sequences import term


def values(sols):
    return [(s.n, s.value) for s in sols]


def test_solve_range_examples():
    assert values(solve_range(2, 2, 10)) == [(1, 2), (2, 6), (3, 14), (4, 34), (5, 82)]
    assert values(solve_range(3, 3, 10)) == [(1, 2), (2, 6), (3, 16), (4, 40), (7, 662)]
    assert (6, 288) in values(solve_range(6, 6, 10))


def test_solutions_reverify():
    for s in solve_range(2, 15, 150):
        assert s.value == term(s.k, s.n)
        assert is_two_run(s.value)
        assert s.decompositions or s.degenerate


def test_monotone():
    small = {(s.k, s.n) for s in solve_range(2, 8, 60)}
    big = {(s.k, s.n) for s in solve_range(2, 12, 120)}
    assert small <= big


def test_parallel_matches_serial():
    assert solve_range(2, 12, 80, workers=2) == solve_range(2, 12, 80)


def test_small_n_via_fibonacci():
    assert values(solve_small_n_via_fibonacci(5)) == [(1, 2), (2, 6), (3, 16), (4, 42), (5, 110)]
    # n = 7 gives 2 F_14 = 754, which has three runs
    assert 7 not in [s.n for s in solve_small_n_via_fibonacci(10)]
    # for k = 2 only n <= 2 is covered by the identity
    assert values(solve_small_n_via_fibonacci(2)) == [(1, 2), (2, 6)]
    for k in range(2, 40):
        solve_small_n_via_fibonacci(k)


@pytest.mark.parametrize("k_max,ns", [(2, {1, 2, 3, 4, 5}), (3, {1, 2, 3, 4, 7})])
def test_verify_small_k(k_max, ns):
    rep = verify_theorem(k_max, 300)
    assert rep.agrees
    assert {n for k, n in rep.matches if k == k_max} == ns


def test_verify_k10():
    rep = verify_theorem(10, 100)
    assert rep.agrees and not rep.extras and not rep.missing
    assert len(rep.discrepancies) == 1
    d = rep.discrepancies[0]
    assert d["printed"] == "2288" and d["recurrence"] == "288"


def test_strict_mode_drops_single_digits():
    rep = verify_theorem(5, 50, strict=True)
    assert rep.agrees
    assert all(s.value >= 10 for s in rep.found)


def test_table_is_data():
    rows = load_expected()["rows"]
    assert any(r.get("printed") == "2288" for r in rows)
    exp = expected_solutions(4, 10)
    assert exp[(4, 4)] == 42 and (3, 5) not in exp


def test_window_holds_for_large_n_solutions():
    for s in solve_range(2, 20, 200):
        if not s.degenerate and s.n >= s.k + 2:
            assert window_ok(s)


def test_solution_validation():
    with pytest.raises(ValueError):
        Solution(2, 3, 123)
    assert Solution(2, 1, 2).degenerate


def test_bad_args():
    with pytest.raises(ValueError):
        solve_range(3, 2, 10)
    with pytest.raises(ValueError):
        verify_theorem(10, 6)
