"""Exact minutia correspondence and the template similarity score."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .errors import EmptyTemplate, NotEnrollable
from .features import MIN_GOOD, MinutiaTuple, Template


@dataclass(frozen=True)
class MatchResult:
    mc: int
    n: int
    m: int

    @property
    def exact_score(self) -> Fraction:
        return (Fraction(self.mc, self.n) + Fraction(self.mc, self.m)) / 2

    @property
    def score(self) -> float:
        return score_from_counts(self.mc, self.n, self.m)


def score_from_counts(mc: int, n: int, m: int) -> float:
    # one rounding step: (mc*m + mc*n) / (2*n*m) in exact integers first
    return (mc * (n + m)) / (2 * n * m)


def correspond(p: MinutiaTuple, g: MinutiaTuple) -> bool:
    return all(a == b and a >= 0 for a, b in zip(p.rcr, g.rcr)) and p.dsq == g.dsq


def vector_counts(tuples: Iterable[MinutiaTuple]) -> Counter:
    """Multiset of matchable vectors; tuples with a truncated axis never correspond."""
    return Counter(t.vector for t in tuples if min(t.rcr) >= 0)


def count_correspondence(sp: Iterable[MinutiaTuple], sg: Iterable[MinutiaTuple]) -> int:
    """Size of a maximum one-to-one pairing of corresponding tuples.

    Correspondence is equality of the eleven-integer vector, so the maximum
    matching is the multiset intersection.
    """
    cp, cg = vector_counts(sp), vector_counts(sg)
    if len(cg) < len(cp):
        cp, cg = cg, cp
    return sum(min(c, cg[v]) for v, c in cp.items() if v in cg)


def similarity(p: Template, g: Template, force: bool = False) -> MatchResult:
    n, m = len(p.tuples), len(g.tuples)
    if not force:
        for t, size in ((p, n), (g, m)):
            if size < MIN_GOOD:
                raise NotEnrollable(size, MIN_GOOD)
    if n == 0 or m == 0:
        raise EmptyTemplate("cannot score a template without good-quality tuples")
    return MatchResult(count_correspondence(p.tuples, g.tuples), n, m)
