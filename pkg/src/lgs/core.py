"""Core model: leveled labeled graphs with downward projections.

A system here is a finite truncation of a leveled labeled graph: vertex
sets ``V_0 .. V_D`` of sizes ``m(0) .. m(D)``, labeled edge sets
``E_{l,l+1}`` between consecutive levels, and surjections
``iota_{l,l+1}: V_{l+1} -> V_l``.  Vertices are addressed 1-based as
``v_i^l``.  The shift acts on the space presented by the diagram; all
operations in this package are exact and stay inside the truncation.

Axioms checked by :func:`LambdaGraphSystem.validate`:

* every ``iota_{l,l+1}`` is surjective;
* every vertex has an outgoing edge, and every vertex at level >= 1 has
  an incoming edge;
* terminal consistency: an edge labeled ``a`` ends at ``v`` in
  ``V_{l+1}`` iff an edge labeled ``a`` ends at ``iota(v)`` in ``V_l``;
* the local property: for ``u`` in ``V_{l-1}`` and ``v`` in ``V_{l+1}``
  the labels of ``{e in E_{l,l+1} : iota(src e) = u, tgt e = v}`` and of
  ``{e in E_{l-1,l} : src e = u, tgt e = iota(v)}`` agree as multisets.

Everything is immutable after construction; all derived data is cached
on the instance, so instances are safe to share.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Symbol",
    "VertexRef",
    "Edge",
    "Violation",
    "ValidationReport",
    "LabeledGraph",
    "LambdaGraphSystem",
    "LgsError",
    "DepthBudgetError",
    "WindowTooSmallError",
    "from_labeled_graph",
    "canonical_lgs",
    "full_shift",
    "transition_matrices",
    "truncate",
]


class LgsError(Exception):
    """Base class for errors raised by this package."""


class DepthBudgetError(LgsError):
    """An operation needed levels beyond the truncation depth.

    Carries ``needed_level`` so callers can rebuild deeper and retry.
    """

    def __init__(self, needed_level, depth, what=""):
        self.needed_level = needed_level
        self.depth = depth
        msg = "operation needs level %d but the truncation stops at %d" % (
            needed_level,
            depth,
        )
        if what:
            msg += " (%s)" % what
        super().__init__(msg)


class WindowTooSmallError(LgsError):
    """The look-ahead window of a construction did not stabilize."""


@dataclass(frozen=True, order=True)
class Symbol:
    """An alphabet letter: position in the declared alphabet + name."""

    id: int
    name: str


@dataclass(frozen=True, order=True)
class VertexRef:
    """Address of the vertex ``v_index^level`` (index is 1-based)."""

    level: int
    index: int

    def __str__(self):
        return "v_%d^%d" % (self.index, self.level)


@dataclass(frozen=True, order=True)
class Edge:
    """A labeled edge between consecutive levels."""

    source: VertexRef
    label: Symbol
    target: VertexRef


@dataclass(frozen=True)
class Violation:
    rule: str
    location: str
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple

    def by_rule(self, rule):
        return tuple(v for v in self.violations if v.rule == rule)


class LabeledGraph:
    """A finite labeled graph: ordered states and labeled edges.

    States are arbitrary strings; their declared order fixes the 1-based
    state indices used when the graph is expanded into a leveled system.

    >>> g = LabeledGraph("even", ["1", "2"], [("1", "b", "1"), ("1", "a", "2"), ("2", "a", "1")])
    >>> g.n
    2
    """

    def __init__(self, name, states, edges):
        self.name = name
        self.states = tuple(str(s) for s in states)
        if len(set(self.states)) != len(self.states):
            raise ValueError("duplicate state names")
        self._idx = {s: k + 1 for k, s in enumerate(self.states)}
        norm = []
        for (s, a, t) in edges:
            s, a, t = str(s), str(a), str(t)
            if s not in self._idx or t not in self._idx:
                raise ValueError("edge %r-%r->%r uses an unknown state" % (s, a, t))
            norm.append((self._idx[s], a, self._idx[t]))
        if len(set(norm)) != len(norm):
            raise ValueError("duplicate (source,label,target) edge")
        self.edges = tuple(sorted(norm, key=lambda e: (e[0], e[1], e[2])))
        self.alphabet = tuple(sorted({a for (_, a, _) in self.edges}))

    @property
    def n(self):
        return len(self.states)

    def state_index(self, s):
        return self._idx[str(s)]

    def out_edges(self, i):
        return tuple(e for e in self.edges if e[0] == i)

    def in_edges(self, j):
        return tuple(e for e in self.edges if e[2] == j)


class LambdaGraphSystem:
    """A depth-``D`` truncation of a leveled labeled graph with projections.

    Parameters
    ----------
    name : str
        Display name.
    alphabet : sequence of str
        Distinct symbol names; declaration order fixes symbol order.
    level_sizes : sequence of int
        ``m(0) .. m(D)``; the depth is ``len(level_sizes) - 1``.
    edges : sequence
        ``edges[l]`` lists the edges of ``E_{l,l+1}`` as triples
        ``(i, sym, j)`` meaning ``v_i^l -> v_j^{l+1}`` labeled ``sym``.
    iota : sequence
        ``iota[l][j-1] = i`` meaning ``iota_{l,l+1}(v_j^{l+1}) = v_i^l``.

    Construction rejects structural garbage (bad indices, unknown
    symbols, duplicate edges); the axioms above are checked separately
    by :meth:`validate` and reported, not raised.
    """

    def __init__(self, name, alphabet, level_sizes, edges, iota):
        self.name = str(name)
        self.alphabet = tuple(str(a) for a in alphabet)
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("duplicate symbols in alphabet")
        self.sym_id = {a: k for k, a in enumerate(self.alphabet)}
        self.level_sizes = tuple(int(m) for m in level_sizes)
        if len(self.level_sizes) < 2:
            raise ValueError("need at least levels 0 and 1")
        if any(m < 1 for m in self.level_sizes):
            raise ValueError("every level must be nonempty")
        self.depth = len(self.level_sizes) - 1
        if len(edges) != self.depth or len(iota) != self.depth:
            raise ValueError("edges and iota must cover levels 0..depth-1")

        packed = []
        for l in range(self.depth):
            lvl = []
            for (i, a, j) in edges[l]:
                i, a, j = int(i), str(a), int(j)
                if a not in self.sym_id:
                    raise ValueError("unknown symbol %r at level %d" % (a, l))
                if not (1 <= i <= self.m(l)) or not (1 <= j <= self.m(l + 1)):
                    raise ValueError("edge (%d,%s,%d) out of range at level %d" % (i, a, j, l))
                lvl.append((i, a, j))
            if len(set(lvl)) != len(lvl):
                raise ValueError("duplicate (source,label,target) edge at level %d" % l)
            packed.append(tuple(sorted(lvl, key=self._edge_key)))
        self.edges = tuple(packed)

        packed_iota = []
        for l in range(self.depth):
            col = tuple(int(x) for x in iota[l])
            if len(col) != self.m(l + 1):
                raise ValueError("iota at level %d must list all of V_%d" % (l, l + 1))
            if any(not (1 <= i <= self.m(l)) for i in col):
                raise ValueError("iota value out of range at level %d" % l)
            packed_iota.append(col)
        self.iota = tuple(packed_iota)

        # derived indexes (immutable after this point)
        self._out = tuple(
            {i: tuple(e for e in self.edges[l] if e[0] == i) for i in self.vertex_range(l)}
            for l in range(self.depth)
        )
        self._in = tuple(
            {j: tuple(e for e in self.edges[l] if e[2] == j) for j in self.vertex_range(l + 1)}
            for l in range(self.depth)
        )
        self._in_by = tuple(
            {
                (j, a): tuple(e[0] for e in self.edges[l] if e[2] == j and e[1] == a)
                for j in self.vertex_range(l + 1)
                for a in self.alphabet
            }
            for l in range(self.depth)
        )
        self._iota_pre = tuple(
            {
                i: tuple(j for j in self.vertex_range(l + 1) if self.iota[l][j - 1] == i)
                for i in self.vertex_range(l)
            }
            for l in range(self.depth)
        )
        self._ends_cache = {}
        self._lr_flag = None

    def _edge_key(self, e):
        return (e[0], self.sym_id[e[1]], e[2])

    def word_key(self, word):
        """Sort key for a label word (alphabet order, then by position)."""
        return tuple(self.sym_id[a] for a in word)

    # -- basic accessors -------------------------------------------------

    def m(self, l):
        return self.level_sizes[l]

    def vertex_range(self, l):
        return range(1, self.m(l) + 1)

    def vertices(self, l):
        return tuple(VertexRef(l, i) for i in self.vertex_range(l))

    def out_edges(self, l, i):
        return self._out[l][i]

    def in_edges(self, l, j):
        """Edges of ``E_{l,l+1}`` ending at ``v_j^{l+1}``."""
        return self._in[l][j]

    def in_sources(self, l, j, a):
        """Sources of edges of ``E_{l,l+1}`` labeled ``a`` into ``v_j^{l+1}``."""
        return self._in_by[l][(j, a)]

    def iota_of(self, l, j):
        """``iota_{l-1,l}`` applied to ``v_j^l`` (index at level l-1)."""
        return self.iota[l - 1][j - 1]

    def iota_preimages(self, l, i):
        """Indices at level ``l+1`` projecting onto ``v_i^l``."""
        return self._iota_pre[l][i]

    def project(self, level, index, to_level):
        """Follow the projections from ``v_index^level`` down to ``to_level``."""
        if not (0 <= to_level <= level):
            raise ValueError("projection must go to a lower level")
        i = index
        for l in range(level, to_level, -1):
            i = self.iota_of(l, i)
        return i

    def edge_objects(self, l):
        return tuple(
            Edge(
                VertexRef(l, i),
                Symbol(self.sym_id[a], a),
                VertexRef(l + 1, j),
            )
            for (i, a, j) in self.edges[l]
        )

    # -- path machinery ---------------------------------------------------

    def end_vertices(self, word, l):
        """Vertices of ``V_l`` at which some path labeled ``word`` ends.

        The path runs through levels ``l-len(word) .. l``.  Results are
        cached; the returned object is a frozenset of 1-based indices.
        """
        word = tuple(word)
        if len(word) > l:
            raise ValueError("a %d-letter path cannot end at level %d" % (len(word), l))
        if l > self.depth:
            raise DepthBudgetError(l, self.depth, "end_vertices")
        key = (word, l)
        hit = self._ends_cache.get(key)
        if hit is not None:
            return hit
        if not word:
            out = frozenset(self.vertex_range(l))
        else:
            prev = self.end_vertices(word[:-1], l - 1)
            a = word[-1]
            out = frozenset(
                j for j in self.vertex_range(l) if any(s in prev for s in self.in_sources(l - 1, j, a))
            )
        self._ends_cache[key] = out
        return out

    def admissible(self, word, l, i):
        """Does some path labeled ``word`` end at ``v_i^l``?"""
        return i in self.end_vertices(word, l)

    def backward_path(self, word, l, i):
        """Trace the unique path labeled ``word`` into ``v_i^l`` backwards.

        Returns the vertex indices at levels ``l-len(word) .. l`` or
        ``None`` when no such path exists.  Uniqueness needs the system
        to be left-resolving; on other systems a ValueError is raised
        when the trace branches.
        """
        verts = [i]
        cur = i
        lvl = l
        for a in reversed(tuple(word)):
            srcs = self.in_sources(lvl - 1, cur, a)
            if not srcs:
                return None
            if len(srcs) > 1:
                raise ValueError("backward trace branches; system is not left-resolving")
            cur = srcs[0]
            lvl -= 1
            verts.append(cur)
        verts.reverse()
        return tuple(verts)

    def forward_step(self, l, sources, a):
        """Targets in ``V_{l+1}`` of ``a``-labeled edges out of ``sources``."""
        out = set()
        for i in sources:
            for (_, b, j) in self.out_edges(l, i):
                if b == a:
                    out.add(j)
        return frozenset(out)

    def label_paths(self, length, start_level=0):
        """Iterate all paths of ``length`` edges from level ``start_level``.

        Yields ``(labels, verts)`` where ``verts`` has ``length + 1``
        vertex indices at levels ``start_level .. start_level+length``.
        Order is deterministic (sources, then labels, then targets).
        """
        if start_level + length > self.depth:
            raise DepthBudgetError(start_level + length, self.depth, "label_paths")

        def rec(l, i, labels, verts):
            if l == start_level + length:
                yield tuple(labels), tuple(verts)
                return
            for (_, a, j) in self.out_edges(l, i):
                labels.append(a)
                verts.append(j)
                yield from rec(l + 1, j, labels, verts)
                labels.pop()
                verts.pop()

        for i in self.vertex_range(start_level):
            yield from rec(start_level, i, [], [i])

    # -- axioms ------------------------------------------------------------

    def validate(self):
        """Check the four axioms and report every violation found.

        Returns
        -------
        ValidationReport
            ``ok`` is True when no violation was found.  Violations name
            the broken rule, a location string, and a human detail line.
        """
        bad = []
        for l in range(self.depth):
            seen = set(self.iota[l])
            for i in self.vertex_range(l):
                if i not in seen:
                    bad.append(
                        Violation(
                            "iota-surjective",
                            "l=%d" % l,
                            "v_%d^%d is not hit by the projection from level %d" % (i, l, l + 1),
                        )
                    )
        for l in range(self.depth):
            for i in self.vertex_range(l):
                if not self.out_edges(l, i):
                    bad.append(
                        Violation(
                            "successor",
                            "l=%d" % l,
                            "v_%d^%d has no outgoing edge" % (i, l),
                        )
                    )
        for l in range(self.depth):
            for j in self.vertex_range(l + 1):
                if not self.in_edges(l, j):
                    bad.append(
                        Violation(
                            "predecessor",
                            "l=%d" % (l + 1),
                            "v_%d^%d has no incoming edge" % (j, l + 1),
                        )
                    )
        for l in range(1, self.depth):
            # in-labels of v at level l+1 vs in-labels of iota(v) at level l
            for j in self.vertex_range(l + 1):
                up = {a for a in self.alphabet if self.in_sources(l, j, a)}
                down = {a for a in self.alphabet if self.in_sources(l - 1, self.iota_of(l + 1, j), a)}
                for a in sorted(up ^ down, key=lambda s: self.sym_id[s]):
                    side = "level %d only" % (l + 1) if a in up else "level %d only" % l
                    bad.append(
                        Violation(
                            "terminal-consistency",
                            "(l=%d, v=v_%d^%d, sym=%s)" % (l, j, l + 1, a),
                            "label %s enters %s (%s)" % (a, VertexRef(l + 1, j), side),
                        )
                    )
        for l in range(1, self.depth):
            for u in self.vertex_range(l - 1):
                for v in self.vertex_range(l + 1):
                    upper = Counter(
                        a for (i, a, j) in self.edges[l] if j == v and self.iota_of(l, i) == u
                    )
                    lower = Counter(
                        a for (i, a, j) in self.edges[l - 1] if i == u and j == self.iota_of(l + 1, v)
                    )
                    if upper != lower:
                        bad.append(
                            Violation(
                                "local-property",
                                "(l=%d, u=v_%d^%d, v=v_%d^%d)" % (l, u, l - 1, v, l + 1),
                                "label multisets differ: %s vs %s"
                                % (sorted(upper.elements()), sorted(lower.elements())),
                            )
                        )
        return ValidationReport(ok=not bad, violations=tuple(bad))

    def is_left_resolving(self):
        """No two distinct edges share (target, label).

        Returns ``(flag, witness)`` where witness is the first colliding
        pair of edges in canonical order, or ``None``.
        """
        for l in range(self.depth):
            for j in self.vertex_range(l + 1):
                for a in self.alphabet:
                    srcs = self.in_sources(l, j, a)
                    if len(srcs) > 1:
                        s0, s1 = sorted(srcs)[:2]
                        sym = Symbol(self.sym_id[a], a)
                        w = (
                            Edge(VertexRef(l, s0), sym, VertexRef(l + 1, j)),
                            Edge(VertexRef(l, s1), sym, VertexRef(l + 1, j)),
                        )
                        return False, w
        return True, None

    def require_left_resolving(self, what):
        """Raise unless no two distinct edges share (target, label).

        Backward traces, disjoint groupoid pieces, and 0/1 structure
        constants all hinge on that uniqueness, so the modules that need
        it refuse other systems up front instead of silently producing
        wrong multiplicities.
        """
        if self._lr_flag is None:
            self._lr_flag = self.is_left_resolving()[0]
        if not self._lr_flag:
            raise ValueError("%s requires a left-resolving system" % what)

    # -- misc ----------------------------------------------------------------

    def __repr__(self):
        return "LambdaGraphSystem(%r, depth=%d, m=%s)" % (
            self.name,
            self.depth,
            list(self.level_sizes),
        )


def from_labeled_graph(graph, depth, name=None):
    """Expand a labeled graph into a depth-``depth`` leveled system.

    Every level is a copy of the state set, every ``E_{l,l+1}`` a copy of
    the edge set, and the projections are the identity.

    Parameters
    ----------
    graph : LabeledGraph
    depth : int
        Number of edge levels (``>= 1``).
    name : str, optional

    Raises
    ------
    ValueError
        If some state has no outgoing or no incoming edge; such a graph
        cannot satisfy the successor/predecessor axioms.

    Examples
    --------
    >>> g = LabeledGraph("full2", ["1"], [("1", "a", "1"), ("1", "b", "1")])
    >>> from_labeled_graph(g, 3).level_sizes
    (1, 1, 1, 1)
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    for i in range(1, graph.n + 1):
        if not graph.out_edges(i):
            raise ValueError("state %s has no outgoing edge" % graph.states[i - 1])
        if not graph.in_edges(i):
            raise ValueError("state %s has no incoming edge" % graph.states[i - 1])
    sizes = [graph.n] * (depth + 1)
    edges = [list(graph.edges) for _ in range(depth)]
    iota = [tuple(range(1, graph.n + 1)) for _ in range(depth)]
    return LambdaGraphSystem(
        name or graph.name, graph.alphabet, sizes, edges, iota
    )


def full_shift(symbols, depth, name=None):
    """The full shift on the given symbols as a one-vertex-per-level system."""
    g = LabeledGraph(name or ("full-" + "".join(symbols)), ["1"], [("1", a, "1") for a in symbols])
    return from_labeled_graph(g, depth, name=name)


def canonical_lgs(graph, depth, window):
    """Past-set presentation of the shift presented by ``graph``.

    Level-``l`` vertices are the distinct sets
    ``past_l(y) = { nu of length l : nu . y admissible }`` computed over
    admissible future words ``y`` of length ``window``.  An edge labeled
    ``a`` joins ``u`` to ``v`` iff ``u = { nu : nu.a in v }`` and ``a``
    extends some future realizing ``v`` on the left; the projection
    drops the first letter of every word in a class.  The result is
    left-resolving by construction.

    For a sofic input the construction is exact once ``window`` reaches
    the synchronization length.  Non-stabilized windows are detected
    (the class partition must agree between future lengths ``window``
    and ``window + 1``, every class must close under the edge and
    projection maps, and the result must validate) and raise
    :class:`WindowTooSmallError` instead of returning a wrong system.
    The window used is recorded in the name of the result.

    Parameters
    ----------
    graph : LabeledGraph
    depth : int
    window : int
        Future length; must be ``>= depth``.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if window < depth:
        raise ValueError("window must be >= depth")
    n = graph.n
    allstates = frozenset(range(1, n + 1))

    def pre(S, a):
        return frozenset(s for (s, b, t) in graph.edges if b == a and t in S)

    def step(col):
        out = set()
        for S in col:
            for a in graph.alphabet:
                P = pre(S, a)
                if P:
                    out.add(P)
        if not out:
            raise ValueError("the graph presents an empty shift")
        return out

    futures = {allstates}
    for _ in range(window):
        futures = step(futures)

    # end-state sets of all admissible words of length <= depth + 1
    ends = {(): allstates}
    frontier = {(): allstates}
    for _ in range(depth + 1):
        nxt = {}
        for w, E in frontier.items():
            for a in graph.alphabet:
                F = frozenset(t for (s, b, t) in graph.edges if b == a and s in E)
                if F:
                    nxt[w + (a,)] = F
        ends.update(nxt)
        frontier = nxt

    def past(S, l):
        return frozenset(w for w, E in ends.items() if len(w) == l and E & S)

    def class_sort_key(c):
        return tuple(sorted(tuple(graph.alphabet.index(a) for a in w) for w in c))

    classes = []
    index = []
    longer = step(futures)  # length window+1 futures, for stabilization
    for l in range(depth + 1):
        cs = sorted({past(S, l) for S in futures}, key=class_sort_key)
        if {past(S, l) for S in longer} != set(cs):
            raise WindowTooSmallError(
                "window %d too small: level-%d past classes differ between "
                "future lengths %d and %d" % (window, l, window, window + 1)
            )
        classes.append(cs)
        index.append({c: k + 1 for k, c in enumerate(cs)})

    edges = [set() for _ in range(depth)]
    for S in futures:
        for l in range(depth):
            v_cls = past(S, l + 1)
            v = index[l + 1][v_cls]
            for a in graph.alphabet:
                if not pre(S, a):
                    continue
                u_cls = frozenset(w for w in ends if len(w) == l and w + (a,) in v_cls)
                u = index[l].get(u_cls)
                if u is None:
                    raise WindowTooSmallError(
                        "window %d too small: the class of a length-%d future has no "
                        "length-%d representative at level %d" % (window, window + 1, window, l)
                    )
                edges[l].add((u, a, v))

    iota = []
    for l in range(depth):
        col = []
        for c in classes[l + 1]:
            t = frozenset(w[1:] for w in c)
            i = index[l].get(t)
            if i is None:
                raise WindowTooSmallError(
                    "window %d too small: truncated class missing at level %d" % (window, l)
                )
            col.append(i)
        iota.append(tuple(col))

    out = LambdaGraphSystem(
        "canonical[%s,depth=%d,window=%d]" % (graph.name, depth, window),
        graph.alphabet,
        [len(cs) for cs in classes],
        [sorted(es, key=lambda e: (e[0], graph.alphabet.index(e[1]), e[2])) for es in edges],
        iota,
    )
    rep = out.validate()
    if not rep.ok:
        v = rep.violations[0]
        raise WindowTooSmallError(
            "window %d too small: result breaks %s at %s" % (window, v.rule, v.location)
        )
    return out


def transition_matrices(lgs, l):
    """0/1 transition data between levels ``l`` and ``l+1``.

    Returns
    -------
    (A, I) : tuple of numpy arrays
        ``A`` has shape ``(m(l), len(alphabet), m(l+1))`` with
        ``A[i-1, s, j-1] = 1`` iff ``v_i^l -> v_j^{l+1}`` labeled by
        symbol ``s`` is an edge; ``I`` has shape ``(m(l), m(l+1))`` with
        ``I[i-1, j-1] = 1`` iff the projection sends ``v_j^{l+1}`` to
        ``v_i^l`` (so every column holds exactly one 1).
    """
    if not (0 <= l < lgs.depth):
        raise DepthBudgetError(l + 1, lgs.depth, "transition_matrices")
    A = np.zeros((lgs.m(l), len(lgs.alphabet), lgs.m(l + 1)), dtype=np.int8)
    for (i, a, j) in lgs.edges[l]:
        A[i - 1, lgs.sym_id[a], j - 1] = 1
    I = np.zeros((lgs.m(l), lgs.m(l + 1)), dtype=np.int8)
    for j in lgs.vertex_range(l + 1):
        I[lgs.iota_of(l + 1, j) - 1, j - 1] = 1
    return A, I


def truncate(lgs, d):
    """The depth-``d`` prefix of a system (``1 <= d <= depth``)."""
    if not (1 <= d <= lgs.depth):
        raise ValueError("truncation depth must be in 1..%d" % lgs.depth)
    return LambdaGraphSystem(
        lgs.name,
        lgs.alphabet,
        lgs.level_sizes[: d + 1],
        [list(lgs.edges[l]) for l in range(d)],
        [lgs.iota[l] for l in range(d)],
    )
