"""Finite model of the tail groupoid: basic bisections and composition.

A basic bisection ``(mu, v @ l, nu)`` with ``len(mu), len(nu) <= l``
pairs the points reading ``mu`` into ``v`` with the points reading
``nu`` into ``v`` along a shared future of ``v``.  It is nonempty
exactly when both cylinders are admissible.  Composition of two basic
bisections is a finite disjoint union of basic bisections again; this
module computes that union directly from path combinatorics.  The
companion algebra module reaches the same answers through generator
rewriting, and the two routes check each other.

Everything here requires a left-resolving system: backward label traces
must be unique for the pieces to be disjoint.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import DepthBudgetError, VertexRef
from .io import format_vertex, format_word

__all__ = [
    "BasicBisection",
    "StableBisection",
    "bisection",
    "is_admissible",
    "inverse",
    "compose",
    "cocycle_value",
    "enumerate_elements",
    "words_into",
    "stable_compose",
    "stable_cocycle",
]


@dataclass(frozen=True, order=True)
class BasicBisection:
    """The triple ``(mu, v_index^level, nu)``; plain data, no system ref."""

    mu: tuple
    level: int
    index: int
    nu: tuple

    @property
    def vertex(self):
        return VertexRef(self.level, self.index)

    def __str__(self):
        return "(%s,%s,%s)" % (
            format_word(self.mu),
            format_vertex(self.level, self.index),
            format_word(self.nu),
        )


@dataclass(frozen=True, order=True)
class StableBisection:
    """A basic bisection with stabilization coordinates ``(p, q)``."""

    base: BasicBisection
    p: int
    q: int

    def __str__(self):
        return "[%s|p=%d,q=%d]" % (self.base, self.p, self.q)


def bisection(lgs, mu, level, index, nu):
    """Build a triple after checking shapes against the system."""
    mu, nu = tuple(mu), tuple(nu)
    if not (0 <= level <= lgs.depth):
        raise DepthBudgetError(level, lgs.depth, "bisection")
    if not (1 <= index <= lgs.m(level)):
        raise ValueError("no vertex v_%d^%d" % (index, level))
    if len(mu) > level or len(nu) > level:
        raise ValueError("words longer than the level are not cylinders")
    for a in mu + nu:
        if a not in lgs.sym_id:
            raise ValueError("unknown symbol %r" % a)
    return BasicBisection(mu, level, index, nu)


def is_admissible(lgs, b):
    """Nonemptiness: both cylinders of the triple must be admissible."""
    return lgs.admissible(b.mu, b.level, b.index) and lgs.admissible(b.nu, b.level, b.index)


def inverse(b):
    return BasicBisection(b.nu, b.level, b.index, b.mu)


def compose(lgs, b1, b2):
    """All pieces of ``b1 . b2`` as a tuple of disjoint basic bisections.

    With ``a = len(b1.nu)`` and ``b = len(b2.mu)``, the product is empty
    unless one word is a prefix of the other.  For ``a >= b`` write
    ``b1.nu = b2.mu + s``; the pieces live at level
    ``max(b1.level, b2.level + len(s))`` and are indexed by the vertices
    ``W`` there that project onto ``b1``'s vertex, whose backward
    ``s``-trace starts over ``b2``'s vertex, and at which all three
    remaining cylinders are admissible.  The mirrored case goes through
    the involution.  Raises :class:`DepthBudgetError` when that level
    lies beyond the truncation.
    """
    lgs.require_left_resolving("groupoid composition")
    a, b = len(b1.nu), len(b2.mu)
    if b > a:
        return tuple(inverse(c) for c in compose(lgs, inverse(b2), inverse(b1)))
    if tuple(b2.mu) != tuple(b1.nu[:b]):
        return ()
    s = tuple(b1.nu[b:])
    lam = max(b1.level, b2.level + len(s))
    if lam > lgs.depth:
        raise DepthBudgetError(lam, lgs.depth, "groupoid composition")
    nu_out = tuple(b2.nu) + s
    pieces = []
    for W in lgs.vertex_range(lam):
        if lgs.project(lam, W, b1.level) != b1.index:
            continue
        trace = lgs.backward_path(s, lam, W)
        if trace is None:
            continue
        if lgs.project(lam - len(s), trace[0], b2.level) != b2.index:
            continue
        if not (
            lgs.admissible(b1.mu, lam, W)
            and lgs.admissible(nu_out, lam, W)
            and lgs.admissible(b1.nu, lam, W)
        ):
            continue
        pieces.append(BasicBisection(tuple(b1.mu), lam, W, nu_out))
    return tuple(pieces)


def cocycle_value(weights, b):
    """Weighted length difference ``w(mu) - w(nu)``.

    ``weights`` maps symbols to numbers; ``None`` weighs every symbol 1,
    giving the canonical cocycle.  Additive under composition: every
    piece of ``b1 . b2`` has value ``c(b1) + c(b2)``.
    """
    if weights is None:
        return len(b.mu) - len(b.nu)
    return sum(weights[a] for a in b.mu) - sum(weights[a] for a in b.nu)


def words_into(lgs, level, index, kmax):
    """Label words of length <= ``kmax`` on paths ending at ``v_index^level``."""
    if kmax > level:
        raise ValueError("paths into level %d have at most %d edges" % (level, level))
    out = {()}
    frontier = {((), index)}
    for _ in range(kmax):
        nxt = set()
        for (w, j) in frontier:
            lvl = level - len(w)
            for (i, a, _) in lgs.in_edges(lvl - 1, j):
                nxt.add(((a,) + w, i))
        frontier = nxt
        out.update(w for (w, _) in frontier)
    return out


def enumerate_elements(lgs, d):
    """All admissible triples anchored at level ``d`` with words up to length ``d``."""
    lgs.require_left_resolving("groupoid enumeration")
    if d > lgs.depth:
        raise DepthBudgetError(d, lgs.depth, "enumerate_elements")
    out = []
    for i in lgs.vertex_range(d):
        ws = sorted(words_into(lgs, d, i, d), key=lambda w: (len(w), lgs.word_key(w)))
        for mu in ws:
            for nu in ws:
                out.append(BasicBisection(mu, d, i, nu))
    return tuple(out)


def stable_compose(lgs, s1, s2):
    """Compose stabilized elements; empty when ``s1.q != s2.p``."""
    if s1.q != s2.p:
        return ()
    return tuple(StableBisection(c, s1.p, s2.q) for c in compose(lgs, s1.base, s2.base))


def stable_cocycle(weights, s, mode="lift"):
    """Cocycle of a stabilized element.

    ``lift`` evaluates the base triple and ignores the coordinates, so a
    transport that preserves base values preserves it by construction;
    ``canonical-stable`` adds the coordinate drift ``q - p``.  Both are
    additive under :func:`stable_compose`.
    """
    base = cocycle_value(weights, s.base)
    if mode == "lift":
        return base
    if mode == "canonical-stable":
        return base + s.q - s.p
    raise ValueError("unknown mode %r" % mode)
