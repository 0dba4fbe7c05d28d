"""Exact generator/relation algebra over a left-resolving system.

The algebra is spanned by monomials ``S_mu E_i^l S_nu^*`` where ``S_a``
is the isometry of the symbol ``a`` and ``E_i^l`` the projection onto
the vertex ``v_i^l``; words satisfy ``len(mu), len(nu) <= l`` and both
cylinders are admissible.  Multiplication is computed by rewriting:

* R1  ``S_a^* S_b = 0`` for ``a != b``;
* R2  ``S_a^* S_a = sum of E_j^1`` over targets of ``a``-edges;
* R3  ``E_i^l E_j^l = 0`` for ``i != j``, idempotent otherwise;
* R4  ``E_i^l = sum of E_j^{l+1}`` over projection preimages ``j``;
* R5  ``E_i^l S_a = S_a . sum of E_j^{l+1}`` over ``a``-edges ``i -> j``.

Coefficients are exact rationals.  Equality of elements is decided by
expanding both sides onto a common grid (same word lengths, same level)
where distinct monomials are indicators of disjoint nonempty sets and
hence linearly independent; mixed length-degrees are split first, which
is valid because the grading by ``len(mu) - len(nu)`` is multiplicative.
Rewriting into deeper levels can run past the truncation; that raises
:class:`DepthBudgetError` naming the level that would have been needed.
"""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from typing import NamedTuple

from .core import DepthBudgetError
from .io import FormatError, format_word, tokenize_word

__all__ = [
    "Monomial",
    "AlgebraElement",
    "ExpressionError",
    "zero",
    "unit",
    "projection",
    "raise_level",
    "generator",
    "word_operator",
    "partial_isometry",
    "RelationCheck",
    "RelationReport",
    "verify_relations",
    "stable_multiply",
    "parse_expression",
]


class Monomial(NamedTuple):
    mu: tuple
    level: int
    index: int
    nu: tuple


class ExpressionError(ValueError):
    """Bad expression text; the message carries the character position."""


def _adj(m):
    return Monomial(m.nu, m.level, m.index, m.mu)


class AlgebraElement:
    """A finite rational combination of monomials over one system.

    Instances are immutable in use: all operations return new elements.
    ``==`` decides mathematical equality exactly (it may need levels
    beyond the truncation and then raises), so elements are unhashable.
    """

    __hash__ = None

    def __init__(self, lgs, terms):
        lgs.require_left_resolving("the algebra")
        self.lgs = lgs
        self.terms = {m: Fraction(c) for m, c in terms.items() if c}

    def _check_peer(self, other):
        if not isinstance(other, AlgebraElement):
            raise TypeError("expected an algebra element")
        if other.lgs is not self.lgs:
            raise ValueError("elements belong to different systems")

    def __add__(self, other):
        self._check_peer(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return AlgebraElement(self.lgs, out)

    def __neg__(self):
        return AlgebraElement(self.lgs, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, q):
        q = Fraction(q)
        return AlgebraElement(self.lgs, {m: c * q for m, c in self.terms.items()})

    def __rmul__(self, q):
        if isinstance(q, AlgebraElement):
            return NotImplemented
        return self.scale(q)

    def __mul__(self, other):
        if not isinstance(other, AlgebraElement):
            return self.scale(other)
        self._check_peer(other)
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                for m, k in _mul_monomials(self.lgs, m1, m2).items():
                    out[m] = out.get(m, 0) + c1 * c2 * k
        return AlgebraElement(self.lgs, out)

    def adjoint(self):
        return AlgebraElement(self.lgs, {_adj(m): c for m, c in self.terms.items()})

    def is_zero(self):
        if not self.terms:
            return True
        for _, terms in _degree_groups(self.terms).items():
            if _grid_expand(self.lgs, terms):
                return False
        return True

    def equals(self, other):
        self._check_peer(other)
        return (self - other).is_zero()

    def canonical(self):
        """Grid-normal form: same-degree terms rewritten onto one grid.

        Equal to ``self``; empty exactly when ``self`` is zero, so the
        printed form of a vanishing combination is ``0``.
        """
        out = {}
        for _, terms in _degree_groups(self.terms).items():
            for m, c in _grid_expand(self.lgs, terms).items():
                out[m] = c
        return AlgebraElement(self.lgs, out)

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.equals(other)

    def degree(self, weights=None):
        """Common weighted degree of all monomials, or None when mixed.

        The degree of a monomial is ``w(mu) - w(nu)``; ``None`` weights
        every symbol 1.  The zero element reports degree 0.
        """
        if not self.terms:
            return 0
        vals = set()
        for m in self.terms:
            if weights is None:
                vals.add(len(m.mu) - len(m.nu))
            else:
                vals.add(sum(weights[a] for a in m.mu) - sum(weights[a] for a in m.nu))
        if len(vals) == 1:
            return vals.pop()
        return None

    def format(self):
        """One monomial per line, deterministic order; ``0`` when empty."""
        if not self.terms:
            return "0"
        lgs = self.lgs
        keys = sorted(
            self.terms,
            key=lambda m: (
                m.level,
                len(m.mu),
                lgs.word_key(m.mu),
                len(m.nu),
                lgs.word_key(m.nu),
                m.index,
            ),
        )
        lines = []
        for m in keys:
            parts = [str(self.terms[m]), "*"]
            if m.mu:
                parts.append("S(%s)" % format_word(m.mu))
            parts.append("E(%d,%d)" % (m.level, m.index))
            if m.nu:
                parts.append("S(%s)^*" % format_word(m.nu))
            lines.append(" ".join(parts))
        return "\n".join(lines)

    def __repr__(self):
        return "<AlgebraElement %d terms over %r>" % (len(self.terms), self.lgs.name)


def _mul_monomials(lgs, m1, m2):
    """Product of two normal monomials as a monomial -> multiplicity map.

    Follows the rewriting rules: the overlapping prefix of ``m1.nu`` and
    ``m2.mu`` cancels through R1/R2/R5 (a mismatch kills the product),
    the spare suffix ``s`` hops over ``E`` by the adjoint of R5, which
    turns into forward ``s``-reachability from ``m2``'s vertex, and the
    two projections meet at the common refinement level through R4/R3.
    Left-resolving keeps every multiplicity at 0 or 1.
    """
    a, b = len(m1.nu), len(m2.mu)
    if b > a:
        flipped = _mul_monomials(lgs, _adj(m2), _adj(m1))
        return {_adj(m): k for m, k in flipped.items()}
    if tuple(m2.mu) != tuple(m1.nu[:b]):
        return {}
    s = tuple(m1.nu[b:])
    lam = max(m1.level, m2.level + len(s))
    if lam > lgs.depth:
        raise DepthBudgetError(lam, lgs.depth, "monomial product")
    reach = frozenset([m2.index])
    lvl = m2.level
    for sym in s:
        reach = lgs.forward_step(lvl, reach, sym)
        lvl += 1
    if not reach:
        return {}
    nu_out = tuple(m2.nu) + s
    out = {}
    for W in lgs.vertex_range(lam):
        if lgs.project(lam, W, m1.level) != m1.index:
            continue
        if lgs.project(lam, W, m2.level + len(s)) not in reach:
            continue
        if not lgs.admissible(m1.mu, lam, W):
            continue
        if not lgs.admissible(nu_out, lam, W):
            continue
        out[Monomial(tuple(m1.mu), lam, W, nu_out)] = 1
    return out


def _degree_groups(terms):
    groups = defaultdict(dict)
    for m, c in terms.items():
        groups[len(m.mu) - len(m.nu)][m] = c
    return groups


def _lift_indices(lgs, level, index, to_level):
    cur = {index}
    for l in range(level, to_level):
        cur = {j for i in cur for j in lgs.iota_preimages(l, i)}
    return cur


def _grid_expand(lgs, terms):
    """Rewrite same-degree terms onto one grid; empty dict means zero.

    Every monomial is deepened (both words extended along outgoing
    edges, an exact refinement) until all words on the ``mu`` side have
    the maximal length, then raised to the maximal resulting level.  On
    the grid, distinct monomials are indicators of disjoint nonempty
    sets, so the combination vanishes iff all coefficients cancel.
    """
    M = max(len(m.mu) for m in terms)
    lam = max(m.level + (M - len(m.mu)) for m in terms)
    if lam > lgs.depth:
        raise DepthBudgetError(lam, lgs.depth, "equality decision")
    out = {}
    for m, c in terms.items():
        cur = {m: c}
        for _ in range(M - len(m.mu)):
            nxt = {}
            for mm, cc in cur.items():
                for (_, sym, j) in lgs.out_edges(mm.level, mm.index):
                    key = Monomial(mm.mu + (sym,), mm.level + 1, j, mm.nu + (sym,))
                    nxt[key] = nxt.get(key, 0) + cc
            cur = nxt
        for mm, cc in cur.items():
            for W in _lift_indices(lgs, mm.level, mm.index, lam):
                if lgs.admissible(mm.mu, lam, W) and lgs.admissible(mm.nu, lam, W):
                    key = Monomial(mm.mu, lam, W, mm.nu)
                    out[key] = out.get(key, 0) + cc
    return {k: v for k, v in out.items() if v}


def raise_level(lgs, m, to_level):
    """Rewrite one monomial with its projection at a deeper level.

    Applies ``E_i^l = sum over iota-preimages of E_j^{l+1}`` repeatedly;
    preimages that make a word inadmissible contribute the zero monomial
    and are dropped.  Idempotent once ``to_level`` is reached.
    """
    if to_level > lgs.depth:
        raise DepthBudgetError(to_level, lgs.depth, "raise_level")
    if to_level < m.level:
        raise ValueError("cannot lower a monomial from level %d to %d" % (m.level, to_level))
    out = {}
    for W in _lift_indices(lgs, m.level, m.index, to_level):
        if lgs.admissible(m.mu, to_level, W) and lgs.admissible(m.nu, to_level, W):
            out[Monomial(m.mu, to_level, W, m.nu)] = 1
    return AlgebraElement(lgs, out)


def zero(lgs):
    return AlgebraElement(lgs, {})


def unit(lgs):
    """The identity, written as the sum of the level-0 projections."""
    return AlgebraElement(lgs, {Monomial((), 0, i, ()): 1 for i in lgs.vertex_range(0)})


def projection(lgs, level, index):
    """The projection ``E_index^level``."""
    lgs.require_left_resolving("the algebra")
    if not (0 <= level <= lgs.depth):
        raise DepthBudgetError(level, lgs.depth, "projection")
    if not (1 <= index <= lgs.m(level)):
        raise ValueError("no vertex v_%d^%d" % (index, level))
    return AlgebraElement(lgs, {Monomial((), level, index, ()): 1})


def generator(lgs, sym):
    """The isometry ``S_sym`` in normal form."""
    lgs.require_left_resolving("the algebra")
    if sym not in lgs.sym_id:
        raise ValueError("unknown symbol %r" % sym)
    word = (sym,)
    return AlgebraElement(
        lgs, {Monomial(word, 1, j, ()): 1 for j in sorted(lgs.end_vertices(word, 1))}
    )


def word_operator(lgs, word):
    """``S_word = S_{w1} ... S_{wk}`` in normal form."""
    lgs.require_left_resolving("the algebra")
    word = tuple(word)
    if not word:
        return unit(lgs)
    k = len(word)
    if k > lgs.depth:
        raise DepthBudgetError(k, lgs.depth, "word operator")
    return AlgebraElement(
        lgs, {Monomial(word, k, j, ()): 1 for j in sorted(lgs.end_vertices(word, k))}
    )


def partial_isometry(lgs, mu, level, index, nu):
    """``S_mu E_index^level S_nu^*``; the zero element when inadmissible."""
    lgs.require_left_resolving("the algebra")
    mu, nu = tuple(mu), tuple(nu)
    if not (0 <= level <= lgs.depth):
        raise DepthBudgetError(level, lgs.depth, "partial isometry")
    if not (1 <= index <= lgs.m(level)):
        raise ValueError("no vertex v_%d^%d" % (index, level))
    if len(mu) > level or len(nu) > level:
        raise ValueError("words longer than the level are not cylinders")
    if not (lgs.admissible(mu, level, index) and lgs.admissible(nu, level, index)):
        return zero(lgs)
    return AlgebraElement(lgs, {Monomial(mu, level, index, nu): 1})


class RelationCheck(NamedTuple):
    name: str
    ok: bool
    detail: str


class RelationReport(NamedTuple):
    level: int
    checks: tuple

    @property
    def ok(self):
        return all(c.ok for c in self.checks)


def verify_relations(lgs, level):
    """Check the five defining relations at one level, via the engine.

    Needs ``level + 1 <= depth`` since four of the relations look one
    level deeper.  Returns a report with one named check per relation:

    * isometry-sum: the range projections of all symbols sum to 1;
    * level-partition: the level's vertex projections sum to 1;
    * range-commutation: each ``S_a S_a^*`` commutes with each ``E_i``;
    * backward-transfer: ``S_a^* E_i S_a`` equals the edge-indicated sum
      of next-level projections;
    * projection-refinement: each ``E_i`` equals the sum of its
      projection preimages one level down.
    """
    lgs.require_left_resolving("the algebra")
    if level + 1 > lgs.depth:
        raise DepthBudgetError(level + 1, lgs.depth, "verify_relations")
    one = unit(lgs)
    checks = []

    total = zero(lgs)
    for a in lgs.alphabet:
        s = generator(lgs, a)
        total = total + s * s.adjoint()
    ok = total.equals(one)
    checks.append(RelationCheck("isometry-sum", ok, "" if ok else "sum differs from 1"))

    total = zero(lgs)
    for i in lgs.vertex_range(level):
        total = total + projection(lgs, level, i)
    ok = total.equals(one)
    checks.append(RelationCheck("level-partition", ok, "" if ok else "sum differs from 1"))

    bad = None
    for a in lgs.alphabet:
        s = generator(lgs, a)
        rng = s * s.adjoint()
        for i in lgs.vertex_range(level):
            e = projection(lgs, level, i)
            if not (rng * e).equals(e * rng):
                bad = (a, i)
                break
        if bad:
            break
    checks.append(
        RelationCheck(
            "range-commutation", bad is None, "" if bad is None else "fails at (%s, %d)" % bad
        )
    )

    bad = None
    for a in lgs.alphabet:
        s = generator(lgs, a)
        for i in lgs.vertex_range(level):
            lhs = s.adjoint() * projection(lgs, level, i) * s
            rhs = zero(lgs)
            for (src, sym, j) in lgs.edges[level]:
                if src == i and sym == a:
                    rhs = rhs + projection(lgs, level + 1, j)
            if not lhs.equals(rhs):
                bad = (a, i)
                break
        if bad:
            break
    checks.append(
        RelationCheck(
            "backward-transfer", bad is None, "" if bad is None else "fails at (%s, %d)" % bad
        )
    )

    bad = None
    for i in lgs.vertex_range(level):
        rhs = zero(lgs)
        for j in lgs.iota_preimages(level, i):
            rhs = rhs + projection(lgs, level + 1, j)
        if not projection(lgs, level, i).equals(rhs):
            bad = i
            break
    checks.append(
        RelationCheck(
            "projection-refinement", bad is None, "" if bad is None else "fails at %d" % bad
        )
    )
    return RelationReport(level=level, checks=tuple(checks))


def stable_multiply(lgs, t1, t2):
    """Multiply stabilized elements ``(x, p, q)``; zero when ``t1.q != t2.p``."""
    x1, p1, q1 = t1
    x2, p2, q2 = t2
    if q1 != p2:
        return (zero(lgs), p1, q2)
    return (x1 * x2, p1, q2)


def parse_expression(lgs, text):
    """Parse ``2/3 * S(ab) E(2,1) S(b)^* + S(a)*S(b)`` style expressions.

    Terms are separated by ``+`` and ``-``; a term is an optional
    rational head followed by juxtaposed factors ``S(word)``, ``E(l,i)``
    and ``1``.  A ``*`` directly after the rational head multiplies; any
    other postfix ``*`` or ``^*`` is the adjoint of the factor before
    it.  The empty word is spelled ``-`` (or left empty).  Errors carry
    the character position.
    """
    lgs.require_left_resolving("the algebra")
    pos = 0
    n = len(text)

    def skip():
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def fail(msg, at=None):
        raise ExpressionError("position %d: %s" % (pos if at is None else at, msg))

    def adjoint_marker():
        nonlocal pos
        skip()
        if text.startswith("^*", pos):
            pos += 2
            return True
        if pos < n and text[pos] == "*":
            pos += 1
            return True
        return False

    def factor():
        nonlocal pos
        skip()
        start = pos
        if pos >= n:
            fail("expected a factor")
        ch = text[pos]
        if ch == "S":
            pos += 1
            skip()
            if pos >= n or text[pos] != "(":
                fail("expected ( after S")
            close = text.find(")", pos)
            if close < 0:
                fail("unclosed S(", start)
            raw = text[pos + 1 : close]
            pos = close + 1
            try:
                word = tokenize_word(lgs.alphabet, raw)
            except FormatError as e:
                fail(str(e), start)
            e = word_operator(lgs, word)
            if adjoint_marker():
                e = e.adjoint()
            return e
        if ch == "E":
            pos += 1
            skip()
            if pos >= n or text[pos] != "(":
                fail("expected ( after E")
            close = text.find(")", pos)
            if close < 0:
                fail("unclosed E(", start)
            inner = text[pos + 1 : close].split(",")
            if len(inner) != 2:
                fail("E takes (level,index)", start)
            try:
                l, i = int(inner[0]), int(inner[1])
            except ValueError:
                fail("E takes integers", start)
            pos = close + 1
            e = projection(lgs, l, i)
            adjoint_marker()  # projections are self-adjoint
            return e
        if ch == "1":
            pos += 1
            return unit(lgs)
        fail("expected S(...), E(...), or 1")

    def rational():
        nonlocal pos
        skip()
        start = pos
        while pos < n and text[pos].isdigit():
            pos += 1
        if pos == start:
            return None
        num = text[start:pos]
        if pos < n and text[pos] == "/":
            pos += 1
            dstart = pos
            while pos < n and text[pos].isdigit():
                pos += 1
            if pos == dstart:
                fail("expected a denominator")
            return Fraction(int(num), int(text[dstart:pos]))
        return Fraction(int(num))

    def at_factor():
        skip()
        return pos < n and text[pos] in "SE1"

    def term():
        nonlocal pos
        coeff = Fraction(1)
        q = rational()
        had_head = q is not None
        if had_head:
            coeff = q
            skip()
            if pos < n and text[pos] == "*":
                pos += 1
                skip()
                if not at_factor():
                    fail("expected a factor after *")
        e = None
        while at_factor():
            f = factor()
            e = f if e is None else e * f
        if e is None:
            if had_head:
                return coeff * unit(lgs)
            fail("expected a factor")
        return coeff * e

    skip()
    if pos >= n:
        fail("empty expression")
    negate = False
    if text[pos] in "+-":
        negate = text[pos] == "-"
        pos += 1
    total = term()
    if negate:
        total = -total
    while True:
        skip()
        if pos >= n:
            return total
        if text[pos] not in "+-":
            fail("expected + or -")
        op = text[pos]
        pos += 1
        t = term()
        total = total + t if op == "+" else total - t
