"""Symbolic matrix view of a leveled labeled graph.

A system of levels ``V_0 .. V_D`` is equivalently a sequence of matrix
pairs ``(M_{l,l+1}, I_{l,l+1})``: the entry ``M_{l,l+1}(i,j)`` is the
multiset of labels of edges ``v_i^l -> v_j^{l+1}``, and ``I_{l,l+1}``
is the 0/1 incidence of the projection (one 1 per column).  The local
property of the graph becomes the entrywise multiset identity

    M_{l,l+1} I_{l+1,l+2} = I_{l,l+1} M_{l+1,l+2}    for l = 0..D-2,

where products concatenate multisets.  This module converts both ways
and checks that identity exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LambdaGraphSystem

__all__ = [
    "SymbolicMatrixSystem",
    "CompatibilityMismatch",
    "CompatibilityReport",
    "from_lgs",
    "verify_compatibility",
    "to_lgs",
]


@dataclass(frozen=True)
class CompatibilityMismatch:
    level: int
    row: int
    col: int
    left: tuple
    right: tuple

    def __str__(self):
        return "level %d entry (%d,%d): %s vs %s" % (
            self.level,
            self.row,
            self.col,
            "+".join(self.left) or "0",
            "+".join(self.right) or "0",
        )


def _mulMI(M, I, mrows, inner, ncols):
    """Multiset product (M . I): M has multiset entries, I is 0/1."""
    out = {}
    for i in range(1, mrows + 1):
        for k in range(1, ncols + 1):
            acc = []
            for j in range(1, inner + 1):
                if I[j - 1, k - 1]:
                    acc.extend(M.get((i, j), ()))
            if acc:
                out[(i, k)] = tuple(sorted(acc))
    return out


def _mulIM(I, M, mrows, inner, ncols):
    out = {}
    for i in range(1, mrows + 1):
        for k in range(1, ncols + 1):
            acc = []
            for j in range(1, inner + 1):
                if I[i - 1, j - 1]:
                    acc.extend(M.get((j, k), ()))
            if acc:
                out[(i, k)] = tuple(sorted(acc))
    return out


class SymbolicMatrixSystem:
    """Sequence of (label-multiset matrix, projection incidence) pairs.

    Parameters
    ----------
    name : str
    alphabet : sequence of str
    level_sizes : sequence of int
    M : sequence of dict
        ``M[l][(i, j)]`` is the multiset of labels on ``v_i^l -> v_j^{l+1}``,
        stored as a sorted tuple; absent keys mean the empty multiset.
    I : sequence of arrays
        ``I[l]`` is the 0/1 matrix of shape ``(m(l), m(l+1))``.
    """

    def __init__(self, name, alphabet, level_sizes, M, I):
        self.name = str(name)
        self.alphabet = tuple(alphabet)
        self.level_sizes = tuple(int(m) for m in level_sizes)
        self.depth = len(self.level_sizes) - 1
        if len(M) != self.depth or len(I) != self.depth:
            raise ValueError("M and I must cover levels 0..depth-1")
        norm = []
        for l in range(self.depth):
            lvl = {}
            for (i, j), labels in M[l].items():
                labels = tuple(sorted(labels))
                if not labels:
                    continue
                if not (1 <= i <= self.m(l) and 1 <= j <= self.m(l + 1)):
                    raise ValueError("entry (%d,%d) out of range at level %d" % (i, j, l))
                if any(a not in self.alphabet for a in labels):
                    raise ValueError("unknown symbol in entry (%d,%d) at level %d" % (i, j, l))
                lvl[(i, j)] = labels
            norm.append(lvl)
        self.M = tuple(norm)
        mats = []
        for l in range(self.depth):
            arr = np.array(I[l], dtype=np.int8)
            if arr.shape != (self.m(l), self.m(l + 1)):
                raise ValueError("I at level %d has shape %s" % (l, arr.shape))
            if not set(np.unique(arr)) <= {0, 1}:
                raise ValueError("I entries must be 0 or 1")
            mats.append(arr)
        self.I = tuple(mats)

    def m(self, l):
        return self.level_sizes[l]

    def entry(self, l, i, j):
        return self.M[l].get((i, j), ())

    def __eq__(self, other):
        if not isinstance(other, SymbolicMatrixSystem):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.level_sizes == other.level_sizes
            and self.M == other.M
            and all((a == b).all() for a, b in zip(self.I, other.I))
        )

    def compatibility_mismatches(self):
        """Entrywise failures of M.I = I.M across consecutive level pairs.

        Returns a tuple of :class:`CompatibilityMismatch`, empty when the
        identity holds at every level pair ``l = 0..depth-2``.
        """
        bad = []
        for l in range(self.depth - 1):
            left = _mulMI(self.M[l], self.I[l + 1], self.m(l), self.m(l + 1), self.m(l + 2))
            right = _mulIM(self.I[l], self.M[l + 1], self.m(l), self.m(l + 1), self.m(l + 2))
            for key in sorted(set(left) | set(right)):
                a, b = left.get(key, ()), right.get(key, ())
                if a != b:
                    bad.append(CompatibilityMismatch(l, key[0], key[1], a, b))
        return tuple(bad)

    def is_compatible(self):
        return not self.compatibility_mismatches()

    def to_lgs(self, name=None):
        """Rebuild the leveled labeled graph this matrix data presents.

        Raises
        ------
        ValueError
            If some multiset entry repeats a symbol (that would need two
            parallel edges with equal label), if some projection column
            does not hold exactly one 1 or some row holds none, if some
            matrix row or column is entirely empty, or if the
            compatibility identity fails.
        """
        for l in range(self.depth):
            for (i, j), labels in self.M[l].items():
                if len(set(labels)) != len(labels):
                    raise ValueError(
                        "entry (%d,%d) at level %d repeats a symbol: %s"
                        % (i, j, l, "+".join(labels))
                    )
            rows = {i for (i, _) in self.M[l]}
            cols = {j for (_, j) in self.M[l]}
            for i in range(1, self.m(l) + 1):
                if i not in rows:
                    raise ValueError("row %d at level %d is empty" % (i, l))
            for j in range(1, self.m(l + 1) + 1):
                if j not in cols:
                    raise ValueError("column %d at level %d is empty" % (j, l))
            csum = self.I[l].sum(axis=0)
            if not (csum == 1).all():
                j = int(np.argmin(csum == 1)) + 1
                raise ValueError(
                    "projection column %d at level %d must hold exactly one 1" % (j, l)
                )
            if not (self.I[l].sum(axis=1) >= 1).all():
                i = int(np.argmin(self.I[l].sum(axis=1) >= 1)) + 1
                raise ValueError("projection row %d at level %d is empty" % (i, l))
        bad = self.compatibility_mismatches()
        if bad:
            raise ValueError("compatibility fails: %s" % bad[0])
        edges = []
        for l in range(self.depth):
            lvl = []
            for (i, j), labels in sorted(self.M[l].items()):
                for a in labels:
                    lvl.append((i, a, j))
            edges.append(lvl)
        iota = []
        for l in range(self.depth):
            col = []
            for j in range(1, self.m(l + 1) + 1):
                col.append(int(np.argmax(self.I[l][:, j - 1])) + 1)
            iota.append(tuple(col))
        return LambdaGraphSystem(
            name or self.name, self.alphabet, self.level_sizes, edges, iota
        )

    def __repr__(self):
        return "SymbolicMatrixSystem(%r, depth=%d, m=%s)" % (
            self.name,
            self.depth,
            list(self.level_sizes),
        )


@dataclass(frozen=True)
class CompatibilityReport:
    """Per-level verdicts for the intertwining identity."""

    levels: tuple  # levels[l] covers the pair (l, l+1)
    mismatches: tuple

    @property
    def ok(self):
        return all(self.levels)

    @property
    def first(self):
        return self.mismatches[0] if self.mismatches else None


def verify_compatibility(s):
    """Check ``M.I = I.M`` at every consecutive level pair.

    Entry comparison is exact multiset equality; the report carries one
    boolean per level pair and every mismatching entry.
    """
    bad = s.compatibility_mismatches()
    failing = {m.level for m in bad}
    levels = tuple(l not in failing for l in range(max(s.depth - 1, 0)))
    return CompatibilityReport(levels=levels, mismatches=bad)


def to_lgs(s, name=None):
    """Rebuild the leveled labeled graph a matrix system presents.

    Inverse of :func:`from_lgs` up to edge ordering.  Rejects systems
    that fail the intertwining identity (reporting the level) and
    systems whose rebuilt graph breaks a structural axiom.
    """
    rep = verify_compatibility(s)
    if not rep.ok:
        raise ValueError("not compatible at level %d (%s)" % (rep.first.level, rep.first))
    iota = []
    for l in range(s.depth):
        cols = []
        for j in range(s.m(l + 1)):
            ones = [i + 1 for i in range(s.m(l)) if s.I[l][i, j]]
            if len(ones) != 1:
                raise ValueError("I at level %d column %d is not a projection" % (l, j + 1))
            cols.append(ones[0])
        iota.append(tuple(cols))
    edges = [
        [(i, a, j) for (i, j), labels in sorted(s.M[l].items()) for a in labels]
        for l in range(s.depth)
    ]
    lgs = LambdaGraphSystem(name or s.name, s.alphabet, s.level_sizes, edges, iota)
    check = lgs.validate()
    if not check.ok:
        v = check.violations[0]
        raise ValueError("rebuilt system breaks %s at %s: %s" % (v.rule, v.location, v.detail))
    return lgs


def from_lgs(lgs):
    """Read the matrix data off a leveled labeled graph."""
    M = []
    for l in range(lgs.depth):
        lvl = {}
        for (i, a, j) in lgs.edges[l]:
            lvl.setdefault((i, j), []).append(a)
        M.append({k: tuple(sorted(v)) for k, v in lvl.items()})
    I = []
    for l in range(lgs.depth):
        arr = np.zeros((lgs.m(l), lgs.m(l + 1)), dtype=np.int8)
        for j in lgs.vertex_range(l + 1):
            arr[lgs.iota_of(l + 1, j) - 1, j - 1] = 1
        I.append(arr)
    return SymbolicMatrixSystem(lgs.name, lgs.alphabet, lgs.level_sizes, M, I)
