"""Concatenations of two base-10 repdigits.

A number N is such a concatenation when its decimal string is a block of
``l`` copies of a digit ``a`` (a >= 1) followed by ``m`` copies of ``b``:

    N = a (10^l - 1)/9 * 10^m + b (10^m - 1)/9
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import groupby


@dataclass(frozen=True, order=True)
class RepdigitConcat:
    a: int
    l: int
    b: int
    m: int

    def __post_init__(self):
        if not 1 <= self.a <= 9:
            raise ValueError(f"leading digit a must be in 1..9, got {self.a}")
        if not 0 <= self.b <= 9:
            raise ValueError(f"trailing digit b must be in 0..9, got {self.b}")
        if self.l < 1 or self.m < 1:
            raise ValueError("block lengths l and m must be >= 1")

    @property
    def value(self) -> int:
        return compose(self)

    @property
    def pure(self) -> bool:
        """Both blocks use the same digit, so the number is one repdigit."""
        return self.a == self.b

    def to_dict(self) -> dict:
        return {"a": self.a, "l": self.l, "b": self.b, "m": self.m}


def repdigit(a: int, length: int) -> int:
    return a * (10 ** length - 1) // 9


def compose(c: RepdigitConcat) -> int:
    return repdigit(c.a, c.l) * 10 ** c.m + repdigit(c.b, c.m)


def digit_runs(n: int) -> list[tuple[int, int]]:
    """Maximal runs of equal decimal digits as ``(digit, length)`` pairs."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    return [(int(d), len(list(g))) for d, g in groupby(str(n))]


def decompose(n: int) -> list[RepdigitConcat]:
    """Every ``(a, l, b, m)`` with l, m >= 1 whose composition is ``n``."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    s = str(n)
    out = []
    for m in range(1, len(s)):
        head, tail = s[:-m], s[-m:]
        if head == head[0] * len(head) and tail == tail[0] * len(tail):
            out.append(RepdigitConcat(int(head[0]), len(head), int(tail[0]), m))
    return out


def is_two_run(n: int) -> bool:
    """At most two maximal runs of equal digits (single digits included)."""
    s = str(n)
    if n < 1:
        raise ValueError("n must be a positive integer")
    changes = sum(1 for x, y in zip(s, s[1:]) if x != y)
    return changes <= 1


def describe(n: int) -> dict:
    """JSON-ready summary of the run structure of ``n``."""
    runs = digit_runs(n)
    return {
        "value": str(n),
        "runs": [{"digit": d, "length": k} for d, k in runs],
        "two_run": is_two_run(n),
        "degenerate": n < 10,
        "decompositions": [c.to_dict() for c in decompose(n)],
    }
