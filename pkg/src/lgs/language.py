"""Admissible words, cylinders, and two dynamical checks.

A word is admissible when some path in the diagram carries it; by the
projection structure this does not depend on the levels the path runs
through, so all enumeration here anchors paths at level 0.  A cylinder
``(word, v @ l)`` with ``len(word) = k <= l`` is admissible exactly
when a path labeled ``word`` through levels ``l-k .. l`` ends at ``v``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import DepthBudgetError, VertexRef

__all__ = [
    "words",
    "cylinders",
    "gamma_plus",
    "ConditionReport",
    "check_condition_i",
    "FreenessCell",
    "FreenessReport",
    "check_essential_freeness",
]


def words(lgs, k):
    """All admissible words of length ``k``, in alphabet order.

    >>> from .core import full_shift
    >>> words(full_shift("ab", 3), 2)
    (('a', 'a'), ('a', 'b'), ('b', 'a'), ('b', 'b'))
    """
    if k > lgs.depth:
        raise DepthBudgetError(k, lgs.depth, "words")
    out = {()}
    for _ in range(k):
        nxt = set()
        for w in out:
            for a in lgs.alphabet:
                if lgs.end_vertices(w + (a,), len(w) + 1):
                    nxt.add(w + (a,))
        out = nxt
    return tuple(sorted(out, key=lgs.word_key))


def cylinders(lgs, k, l):
    """Admissible cylinders ``(word, index)`` with ``len(word) = k`` at level ``l``.

    Pairs are sorted by word, then by vertex index.
    """
    if not (0 <= k <= l):
        raise ValueError("need 0 <= k <= l")
    if l > lgs.depth:
        raise DepthBudgetError(l, lgs.depth, "cylinders")
    out = []
    for w in words(lgs, k):
        for i in sorted(lgs.end_vertices(w, l)):
            out.append((w, i))
    return tuple(out)


def gamma_plus(lgs, l, i, d):
    """Distinct label words of length ``d`` on paths leaving ``v_i^l``."""
    if l + d > lgs.depth:
        raise DepthBudgetError(l + d, lgs.depth, "gamma_plus")
    seen = set()

    def rec(lvl, j, acc):
        if len(acc) == d:
            seen.add(tuple(acc))
            return
        for (_, a, t) in lgs.out_edges(lvl, j):
            acc.append(a)
            rec(lvl + 1, t, acc)
            acc.pop()

    rec(l, i, [])
    return tuple(sorted(seen, key=lgs.word_key))


@dataclass(frozen=True)
class ConditionReport:
    """Result of the follower-separation check at a fixed look-ahead."""

    d: int
    satisfied: bool
    failures: tuple  # (VertexRef, words seen)


def check_condition_i(lgs, d):
    """Does every vertex see at least two distinct length-``d`` futures?

    Only vertices at levels ``l`` with ``l + d <= depth`` can be
    examined inside the truncation; the check covers exactly those.
    The property is monotone in ``d``: once a vertex separates at some
    look-ahead it separates at every larger one.
    """
    if d < 1:
        raise ValueError("look-ahead must be >= 1")
    if d > lgs.depth:
        raise DepthBudgetError(d, lgs.depth, "check_condition_i")
    failures = []
    for l in range(lgs.depth - d + 1):
        for i in lgs.vertex_range(l):
            g = gamma_plus(lgs, l, i, d)
            if len(g) < 2:
                failures.append((VertexRef(l, i), g))
    return ConditionReport(d=d, satisfied=not failures, failures=tuple(failures))


@dataclass(frozen=True)
class FreenessCell:
    word: tuple
    index: int
    status: str  # "WITNESS" or "UNRESOLVED"
    witness: tuple | None


@dataclass(frozen=True)
class FreenessReport:
    m: int
    n: int
    d: int
    verdict: str  # "CERTIFIED" or "INCONCLUSIVE"
    cells: tuple

    def unresolved(self):
        return tuple(c for c in self.cells if c.status == "UNRESOLVED")


def check_essential_freeness(lgs, m, n, d):
    """Look for label witnesses against ``sigma^m = sigma^n`` on each cell.

    A point with ``sigma^m x = sigma^n x`` has eventually periodic
    labels: ``x_j = x_{j+m-n}`` for all ``j > n``.  For every admissible
    depth-``d`` cylinder ``(w, v)`` the check searches the extensions of
    ``w`` through ``v`` available in the truncation for a word breaking
    that periodicity; finding one shows the cylinder contains a point
    moved by the two shift powers.  Cells where every extension stays
    periodic are reported UNRESOLVED: the truncation can never certify
    that a cylinder is entirely fixed, so the verdict is either
    CERTIFIED (all cells witnessed) or INCONCLUSIVE.

    Requires ``m > n >= 0`` and ``d + m <= depth``.
    """
    if not (m > n >= 0):
        raise ValueError("need m > n >= 0")
    if d < 1:
        raise ValueError("need d >= 1")
    if d + m > lgs.depth:
        raise DepthBudgetError(d + m, lgs.depth, "check_essential_freeness")
    p = m - n
    T = lgs.depth

    def breaks(word):
        # positions are 1-based; word must violate x_j = x_{j+p} somewhere past n
        for j in range(n + 1, len(word) - p + 1):
            if word[j - 1] != word[j - 1 + p]:
                return True
        return False

    cells = []
    for w in sorted(
        {x for x in _square_words(lgs, d)}, key=lambda wi: (lgs.word_key(wi[0]), wi[1])
    ):
        word, i = w
        found = None
        for tail in gamma_plus(lgs, d, i, T - d):
            full = word + tail
            if breaks(full):
                found = full
                break
        if found is not None:
            cells.append(FreenessCell(word, i, "WITNESS", found))
        else:
            cells.append(FreenessCell(word, i, "UNRESOLVED", None))
    verdict = "CERTIFIED" if all(c.status == "WITNESS" for c in cells) else "INCONCLUSIVE"
    return FreenessReport(m=m, n=n, d=d, verdict=verdict, cells=tuple(cells))


def _square_words(lgs, d):
    for w in words(lgs, d):
        for i in sorted(lgs.end_vertices(w, d)):
            yield (w, i)
