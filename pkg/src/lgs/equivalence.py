"""Certificates and checkers for orbit-level equivalences.

All checking here is exhaustive over the finite truncations: points are
replaced by full-depth fragments (label word + diagonal vertex per
position), sliding-window codes are applied literally, and the declared
equations are evaluated on every fragment, to the depth the truncations
support.  A passing report therefore certifies the stated identities on
every fragment of the models; a failing one carries the
lexicographically least witness word of minimal length.

Checkers cover three notions, strongest last:

* continuous orbit equivalence: a window code with cylinder functions
  ``k, l`` prescribing how the shift on one side is traded against
  shift powers on the other;
* eventual conjugacy: the same with constant exponents ``K``;
* two-sided conjugacy: a single forward window code, an injectivity
  window, and a recoding bound, checked by the tail-separation and
  recoding conditions; this is also what the stabilized transport is
  built from.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import NamedTuple

from .core import DepthBudgetError, LgsError
from .io import format_word, parse_cylinder_token, parse_vertex_token
from . import algebra
from .groupoid import (
    BasicBisection,
    StableBisection,
    cocycle_value,
    compose,
    enumerate_elements,
    inverse,
    is_admissible,
    stable_cocycle,
    stable_compose,
)

__all__ = [
    "Fragment",
    "CodeResolutionError",
    "CodeApplicationError",
    "all_fragments",
    "shift_fragment",
    "window_of",
    "CylinderFunction",
    "OneSidedCode",
    "CoeCertificate",
    "EcCertificate",
    "TwoSidedCertificate",
    "certificate_from_spec",
    "CheckResult",
    "EquivalenceReport",
    "check_coe",
    "check_eventual_conjugacy",
    "check_two_sided",
    "PastClasses",
    "past_equivalence_classes",
    "GroupoidMap",
    "coe_to_groupoid_iso",
    "check_groupoid_iso",
    "StableIso",
    "build_stable_iso",
]


class CodeResolutionError(LgsError):
    """A code image could not be pinned down: some lift is ambiguous."""


class CodeApplicationError(LgsError):
    """A code could not be applied: missing rule or broken image path."""


class Fragment(NamedTuple):
    """A depth-``T`` path from level 0: labels and diagonal vertices.

    ``verts[p]`` is the vertex index at level ``p`` reached after
    position ``p``; ``verts[0]`` is the start vertex at level 0.
    """

    labels: tuple
    verts: tuple


def all_fragments(lgs, depth=None):
    """Every depth-``depth`` fragment of the system (full depth by default)."""
    depth = lgs.depth if depth is None else int(depth)
    if not 0 <= depth <= lgs.depth:
        raise DepthBudgetError(depth, lgs.depth, "fragment enumeration")
    cache = getattr(lgs, "_fragments_cache", None)
    if cache is None:
        cache = {}
        lgs._fragments_cache = cache
    if depth not in cache:
        cache[depth] = tuple(Fragment(l, v) for (l, v) in lgs.label_paths(depth))
    return cache[depth]


def shift_fragment(lgs, frag):
    """Drop the first position; deeper vertices project down one level."""
    verts = tuple(
        lgs.project(p + 1, frag.verts[p + 1], p) for p in range(len(frag.verts) - 1)
    )
    return Fragment(frag.labels[1:], verts)


def window_of(lgs, frag, i, d):
    """The depth-``d`` square window at position ``i``: word + vertex at level ``d``."""
    word = frag.labels[i - 1 : i - 1 + d]
    if len(word) != d or i < 1:
        raise ValueError("window %d..%d is out of range" % (i, i + d - 1))
    return word, lgs.project(i + d - 1, frag.verts[i + d - 1], d)


def _agree(f1, f2, n):
    return f1.labels[:n] == f2.labels[:n] and f1.verts[: n + 1] == f2.verts[: n + 1]


class CylinderFunction:
    """An integer function of the depth-``window`` square window at position 1.

    Either a table over ``(word, vertex at level window)`` keys, or a
    constant (``window`` 0).  Used for the shift-exponent bookkeeping of
    the orbit-equivalence checks.
    """

    def __init__(self, lgs, window, values=None, const=None):
        if (values is None) == (const is None):
            raise ValueError("give exactly one of values or const")
        self.lgs = lgs
        self.window = 0 if const is not None else int(window)
        self.const = const
        self.values = {} if values is None else {
            (tuple(w), int(i)): int(v) for ((w, i), v) in values.items()
        }

    def __call__(self, frag):
        if self.const is not None:
            return self.const
        if len(frag.labels) < self.window:
            raise DepthBudgetError(self.window, len(frag.labels), "cylinder function")
        key = window_of(self.lgs, frag, 1, self.window)
        if key not in self.values:
            raise CodeApplicationError(
                "no value on the window (%s, %d)" % (format_word(key[0]), key[1])
            )
        return self.values[key]

    def max_value(self):
        if self.const is not None:
            return self.const
        return max(self.values.values(), default=0)

    def failures(self):
        """(missing windows, negative entries): both empty when usable."""
        if self.const is not None:
            return ((), ((("const",), self.const),) if self.const < 0 else ())
        missing = []
        for (w, i) in _squares(self.lgs, self.window):
            if (w, i) not in self.values:
                missing.append((w, i))
        neg = tuple(((w, i), v) for ((w, i), v) in sorted(self.values.items()) if v < 0)
        return tuple(missing), neg


def _squares(lgs, d):
    from .language import words

    for w in words(lgs, d):
        for i in sorted(lgs.end_vertices(w, d)):
            yield (w, i)


class OneSidedCode:
    """A sliding-window code between systems.

    Each rule sends a depth-``window`` square window of the source to an
    output symbol plus a vertex selector of the target at the fixed
    level ``sel_level``.  Applying the code to a fragment evaluates the
    rule at every position and reassembles a full image fragment; where
    the selector level is shallower than a needed diagonal level, the
    vertex is lifted through the projection preimages and any ambiguity
    raises :class:`CodeResolutionError` rather than guessing.
    """

    def __init__(self, source, target, window, rules, sel_level=None, name=""):
        self.source = source
        self.target = target
        self.window = int(window)
        self.sel_level = self.window if sel_level is None else int(sel_level)
        self.name = name
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if not (1 <= self.sel_level <= target.depth):
            raise ValueError("selector level out of range")
        norm = {}
        for (w, i), (sym, j) in rules.items():
            norm[(tuple(w), int(i))] = (str(sym), int(j))
        self.rules = norm

    def apply(self, frag):
        d, L = self.window, self.sel_level
        T = len(frag.labels)
        out_len = T - d + 1
        if out_len < 1:
            raise DepthBudgetError(d, T, "code application")
        labels = []
        sels = []
        for i in range(1, out_len + 1):
            key = window_of(self.source, frag, i, d)
            rule = self.rules.get(key)
            if rule is None:
                raise CodeApplicationError(
                    "no rule for the window (%s, %d)" % (format_word(key[0]), key[1])
                )
            labels.append(rule[0])
            sels.append(rule[1])
        verts = [0] * (out_len + 1)
        for p in range(1, out_len + 1):
            verts[p] = self._to_level(sels[p - 1], p)
        starts = self.target.in_sources(0, verts[1], labels[0])
        if len(starts) != 1:
            raise CodeResolutionError(
                "image start vertex is not determined (found %d candidates)" % len(starts)
            )
        verts[0] = starts[0]
        for p in range(1, out_len + 1):
            if verts[p - 1] not in self.target.in_sources(p - 1, verts[p], labels[p - 1]):
                raise CodeApplicationError(
                    "image is not a path at position %d" % p
                )
        return Fragment(tuple(labels), tuple(verts))

    def _to_level(self, sel, p):
        L = self.sel_level
        if L >= p:
            return self.target.project(L, sel, p)
        cur = sel
        for lvl in range(L, p):
            pre = self.target.iota_preimages(lvl, cur)
            if len(pre) != 1:
                raise CodeResolutionError(
                    "lifting v_%d^%d is ambiguous (%d preimages)" % (cur, lvl, len(pre))
                )
            cur = pre[0]
        return cur

    def well_defined_checks(self):
        """Totality, key admissibility, window-overlap and in-edge conditions."""
        src, tgt, d, L = self.source, self.target, self.window, self.sel_level
        out = []
        squares = set(_squares(src, d))
        missing = sorted(squares - set(self.rules), key=lambda k: (src.word_key(k[0]), k[1]))
        out.append(
            CheckResult(
                "total",
                not missing,
                missing[0] if missing else None,
                "" if not missing else "%d windows lack a rule" % len(missing),
            )
        )
        extras = sorted(set(self.rules) - squares)
        out.append(
            CheckResult(
                "keys-admissible",
                not extras,
                extras[0] if extras else None,
                "" if not extras else "%d rules sit on inadmissible windows" % len(extras),
            )
        )
        bad = None
        for (w, i), (sym, j) in sorted(self.rules.items()):
            if sym not in tgt.sym_id or not (1 <= j <= tgt.m(L)):
                bad = ((w, i), "output out of range")
                break
            if not tgt.in_sources(L - 1, j, sym):
                bad = ((w, i), "no %s-edge into the selected vertex" % sym)
                break
        out.append(
            CheckResult(
                "outputs-consistent",
                bad is None,
                bad[0] if bad else None,
                bad[1] if bad else "",
            )
        )
        bad = None
        for (w, i) in sorted(squares & set(self.rules)):
            sym1, j1 = self.rules[(w, i)]
            u = src.project(d, i, d - 1)
            for (_, a, i2) in src.out_edges(d - 1, u):
                w2 = w[1:] + (a,)
                key2 = (w2, i2)
                if key2 not in self.rules or not src.admissible(w2, d, i2):
                    continue
                sym2, j2 = self.rules[key2]
                if tgt.project(L, j1, L - 1) not in tgt.in_sources(L - 1, j2, sym2):
                    bad = ((w, i), key2)
                    break
            if bad:
                break
        out.append(
            CheckResult(
                "window-overlap",
                bad is None,
                bad,
                "" if bad is None else "consecutive selectors are not linked by an edge",
            )
        )
        return tuple(out)


@dataclass
class CoeCertificate:
    name: str
    forward: OneSidedCode
    inverse: OneSidedCode
    k1: CylinderFunction
    l1: CylinderFunction
    k2: CylinderFunction
    l2: CylinderFunction


@dataclass
class EcCertificate:
    name: str
    forward: OneSidedCode
    inverse: OneSidedCode
    K1: int
    K2: int


@dataclass
class TwoSidedCertificate:
    name: str
    psi0: OneSidedCode
    inj_window: int
    recode_bound: int


def certificate_from_spec(spec, lgs1, lgs2, kind):
    """Resolve a parsed certificate document against two systems.

    ``kind`` is ``"coe"``, ``"ec"``, or ``"two-sided"``; it selects
    which directives are required.
    """
    if spec.window is None:
        raise ValueError("certificate lacks a window directive")

    def build_code(lines, src, tgt, what):
        rules = {}
        window = None
        sel_levels = set()
        for (cyl, sym, vsel) in lines:
            word, (l, i) = parse_cylinder_token(src.alphabet, cyl)
            if len(word) != l:
                raise ValueError("%s rule %r is not a square window" % (what, cyl))
            if window is None:
                window = l
            elif window != l:
                raise ValueError("%s rules mix window depths" % what)
            (sl, sj) = parse_vertex_token(vsel)
            sel_levels.add(sl)
            rules[(word, i)] = (sym, sj)
        if not rules:
            raise ValueError("certificate has no %s rules" % what)
        if len(sel_levels) != 1:
            raise ValueError("%s rules mix selector levels" % what)
        return OneSidedCode(src, tgt, window, rules, sel_level=sel_levels.pop(), name=spec.name)

    def build_fun(entry, lgs, what):
        if entry is None:
            raise ValueError("certificate lacks %s" % what)
        if isinstance(entry, tuple) and entry and entry[0] == "const":
            return CylinderFunction(lgs, 0, const=entry[1])
        values = {}
        window = None
        for (cyl, v) in entry:
            word, (l, i) = parse_cylinder_token(lgs.alphabet, cyl)
            if len(word) != l:
                raise ValueError("%s entry %r is not a square window" % (what, cyl))
            if window is None:
                window = l
            elif window != l:
                raise ValueError("%s entries mix window depths" % what)
            values[(word, i)] = v
        return CylinderFunction(lgs, window, values=values)

    forward = build_code(spec.forward, lgs1, lgs2, "forward")
    if kind == "two-sided":
        if spec.inj_window is None or spec.recode_bound is None:
            raise ValueError("two-sided certificate needs inj-window and recode-bound")
        return TwoSidedCertificate(spec.name, forward, spec.inj_window, spec.recode_bound)
    inverse_code = build_code(spec.inverse, lgs2, lgs1, "inverse")
    if kind == "coe":
        return CoeCertificate(
            spec.name,
            forward,
            inverse_code,
            build_fun(spec.kfun.get(1), lgs1, "kfun 1"),
            build_fun(spec.lfun.get(1), lgs1, "lfun 1"),
            build_fun(spec.kfun.get(2), lgs2, "kfun 2"),
            build_fun(spec.lfun.get(2), lgs2, "lfun 2"),
        )
    if kind == "ec":
        if 1 not in spec.K or 2 not in spec.K:
            raise ValueError("eventual-conjugacy certificate needs const K1 and K2")
        return EcCertificate(spec.name, forward, inverse_code, spec.K[1], spec.K[2])
    raise ValueError("unknown certificate kind %r" % kind)


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    witness: object = None
    detail: str = ""


@dataclass(frozen=True)
class EquivalenceReport:
    kind: str
    checks: tuple
    notes: tuple = ()

    @property
    def ok(self):
        return all(c.ok for c in self.checks)

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _least_witness(lgs, cands):
    return min(cands, key=lambda w: (len(w), lgs.word_key(w)))


def _code_check(name, code):
    subs = code.well_defined_checks()
    ok = all(c.ok for c in subs)
    first = next((c for c in subs if not c.ok), None)
    return CheckResult(
        name, ok, None if ok else first.witness, "" if ok else "%s: %s" % (first.name, first.detail)
    )


def _label_determined(name, code, depth):
    groups = {}
    bad = []
    for frag in all_fragments(code.source, depth):
        try:
            img = code.apply(frag)
        except (CodeApplicationError, CodeResolutionError):
            continue
        if frag.labels in groups and groups[frag.labels] != img.labels:
            bad.append(frag.labels)
        groups.setdefault(frag.labels, img.labels)
    ok = not bad
    return CheckResult(
        name,
        ok,
        None if ok else _least_witness(code.source, bad),
        "" if ok else "image labels depend on vertex data",
    )


def _equation_check(name, code, kf, lf, depth):
    """Verify ``sigma^k(h(sigma x)) = sigma^l(h(x))`` on every fragment."""
    lgs = code.source
    d = code.window
    bad = []
    for frag in all_fragments(lgs, depth):
        try:
            k, l = kf(frag), lf(frag)
            hx = code.apply(frag)
            hsx = code.apply(shift_fragment(lgs, frag))
        except (CodeApplicationError, CodeResolutionError):
            bad.append(frag.labels)
            continue
        if k < 0 or l < 0:
            bad.append(frag.labels[: max(kf.window, lf.window, 1)])
            continue
        lhs = hsx
        for _ in range(k):
            lhs = shift_fragment(code.target, lhs)
        rhs = hx
        for _ in range(l):
            rhs = shift_fragment(code.target, rhs)
        n = min(len(lhs.labels), len(rhs.labels))
        if n < 1:
            raise DepthBudgetError(
                d + max(k, l) + 1, lgs.depth, "orbit equation needs a longer truncation"
            )
        if _agree(lhs, rhs, n):
            continue
        j = next(
            p
            for p in range(1, n + 1)
            if lhs.labels[p - 1 : p] != rhs.labels[p - 1 : p]
            or lhs.verts[p] != rhs.verts[p]
        )
        need = max(j + k + d, j + l + d - 1)
        bad.append(frag.labels[: min(len(frag.labels), need)])
    ok = not bad
    return CheckResult(name, ok, None if ok else _least_witness(lgs, bad), "")


def _inverse_check(name, fwd, inv, depth, compare):
    """``inv(fwd(x))`` must reproduce ``x`` to the comparison depth."""
    lgs = fwd.source
    bad = []
    for frag in all_fragments(lgs, depth):
        try:
            back = inv.apply(fwd.apply(frag))
        except (CodeApplicationError, CodeResolutionError):
            bad.append(frag.labels)
            continue
        if not _agree(frag, back, min(len(back.labels), compare)):
            bad.append(frag.labels)
    ok = not bad
    return CheckResult(name, ok, None if ok else _least_witness(lgs, bad), "")


def _function_check(name, funcs):
    for label, f in funcs:
        missing, neg = f.failures()
        if missing:
            return CheckResult(name, False, missing[0], "%s lacks values" % label)
        if neg:
            return CheckResult(name, False, neg[0][0], "%s takes negative values" % label)
    return CheckResult(name, True)


def _certificate_systems(code, lgs1, lgs2):
    if code.source is not lgs1 or code.target is not lgs2:
        raise ValueError("certificate codes were built for different systems")


def check_coe(lgs1, lgs2, cert, D):
    """Exhaustively verify a continuous-orbit-equivalence certificate.

    ``D`` is the cylinder depth at which every clause is decided.  The
    orbit equations extend each depth-``D`` cylinder far enough to apply
    the largest declared shift exponent, and the code round trips are
    compared to depth ``D`` exactly.  Insufficient truncation depth is
    an error, never a silent weakening.
    """
    fwd, inv = cert.forward, cert.inverse
    _certificate_systems(fwd, lgs1, lgs2)
    if D < max(fwd.window, inv.window, 1):
        raise ValueError("depth %d is below the certificate windows" % D)
    p1 = D + max(cert.k1.max_value(), cert.l1.max_value(), 0) + 1
    p2 = D + max(cert.k2.max_value(), cert.l2.max_value(), 0) + 1
    rt = D + fwd.window + inv.window - 2
    if max(p1, rt) > lgs1.depth:
        raise DepthBudgetError(max(p1, rt), lgs1.depth, "orbit-equivalence check")
    if max(p2, rt) > lgs2.depth:
        raise DepthBudgetError(max(p2, rt), lgs2.depth, "orbit-equivalence check")
    checks = [
        _code_check("forward-code", fwd),
        _code_check("inverse-code", inv),
        _label_determined("forward-label-determined", fwd, p1),
        _label_determined("inverse-label-determined", inv, p2),
        _function_check(
            "functions-usable",
            [("k1", cert.k1), ("l1", cert.l1), ("k2", cert.k2), ("l2", cert.l2)],
        ),
        _equation_check("side1-equation", fwd, cert.k1, cert.l1, p1),
        _equation_check("side2-equation", inv, cert.k2, cert.l2, p2),
        _inverse_check("left-inverse", fwd, inv, rt, D),
        _inverse_check("right-inverse", inv, fwd, rt, D),
    ]
    return EquivalenceReport("coe", tuple(checks), notes=(("D", D),))


def check_eventual_conjugacy(lgs1, lgs2, cert, D):
    """Verify an eventual-conjugacy certificate (constant exponents).

    A passing certificate is additionally rerun through
    :func:`check_coe` with ``k := K`` and ``l := K + 1``; that
    implication is recorded as the ``coe-implication`` check line.
    """
    fwd, inv = cert.forward, cert.inverse
    _certificate_systems(fwd, lgs1, lgs2)
    if cert.K1 < 0 or cert.K2 < 0:
        raise ValueError("exponents must be nonnegative")
    if D < max(fwd.window, inv.window, 1):
        raise ValueError("depth %d is below the certificate windows" % D)
    c1k = CylinderFunction(lgs1, 0, const=cert.K1)
    c1l = CylinderFunction(lgs1, 0, const=cert.K1 + 1)
    c2k = CylinderFunction(lgs2, 0, const=cert.K2)
    c2l = CylinderFunction(lgs2, 0, const=cert.K2 + 1)
    p1 = D + cert.K1 + 2
    p2 = D + cert.K2 + 2
    rt = D + fwd.window + inv.window - 2
    if max(p1, rt) > lgs1.depth:
        raise DepthBudgetError(max(p1, rt), lgs1.depth, "eventual-conjugacy check")
    if max(p2, rt) > lgs2.depth:
        raise DepthBudgetError(max(p2, rt), lgs2.depth, "eventual-conjugacy check")
    checks = [
        _code_check("forward-code", fwd),
        _code_check("inverse-code", inv),
        _label_determined("forward-label-determined", fwd, p1),
        _label_determined("inverse-label-determined", inv, p2),
        _equation_check("side1-equation", fwd, c1k, c1l, p1),
        _equation_check("side2-equation", inv, c2k, c2l, p2),
        _inverse_check("left-inverse", fwd, inv, rt, D),
        _inverse_check("right-inverse", inv, fwd, rt, D),
    ]
    if all(c.ok for c in checks):
        coe = CoeCertificate(cert.name, fwd, inv, c1k, c1l, c2k, c2l)
        implied = check_coe(lgs1, lgs2, coe, D)
        checks.append(
            CheckResult(
                "coe-implication",
                implied.ok,
                None if implied.ok else tuple(c.name for c in implied.checks if not c.ok),
                "" if implied.ok else "orbit-equivalence checker disagrees",
            )
        )
    return EquivalenceReport("ec", tuple(checks), notes=(("D", D),))


def check_two_sided(lgs1, lgs2, cert, D):
    """Verify a two-sided-conjugacy certificate at depth ``D``.

    Checks, in order: the code is well defined; it commutes with the
    shift; its images cover every admissible square window of the
    target at depth ``D - recode_bound``; fragments with equal images
    agree from position ``inj_window`` on (tail separation); and the
    first ``inj_window`` image positions are constant on each
    depth-``recode_bound`` square class, with the structural bound
    ``recode_bound >= inj_window + window - 1``.  The report notes the
    reduction constants ``M = 0`` and ``N = inj_window``.
    """
    psi, l, L = cert.psi0, cert.inj_window, cert.recode_bound
    _certificate_systems(psi, lgs1, lgs2)
    d = psi.window
    if not (0 <= l <= L):
        raise ValueError("need 0 <= inj-window <= recode-bound")
    if L < d - 1:
        raise ValueError("recode-bound is too small to pin one image position")
    if D < max(L, d + 1):
        raise ValueError("depth %d is below the certificate bounds" % D)
    if D > lgs1.depth or D > lgs2.depth:
        raise DepthBudgetError(D, min(lgs1.depth, lgs2.depth), "two-sided check")
    checks = [_code_check("code", psi)]

    bad = []
    images = {}
    for frag in all_fragments(lgs1, D):
        try:
            img = psi.apply(frag)
            imgs = psi.apply(shift_fragment(lgs1, frag))
        except (CodeApplicationError, CodeResolutionError):
            bad.append(frag.labels)
            continue
        images[frag] = img
        if not _agree(shift_fragment(lgs2, img), imgs, len(imgs.labels)):
            bad.append(frag.labels)
    checks.append(
        CheckResult(
            "shift-commuting",
            not bad,
            None if not bad else _least_witness(lgs1, bad),
            "",
        )
    )

    t = D - L
    hit = set()
    for img in images.values():
        hit.add(window_of(lgs2, img, 1, t))
    missed = sorted(set(_squares(lgs2, t)) - hit, key=lambda k: (lgs2.word_key(k[0]), k[1]))
    checks.append(
        CheckResult(
            "surjective",
            not missed,
            missed[0] if missed else None,
            "" if not missed else "depth-%d windows of the target are not covered" % t,
        )
    )

    P = D - d + 1
    groups = {}
    for frag, img in images.items():
        groups.setdefault(img, []).append(frag)
    pair = None
    for members in groups.values():
        base = members[0]
        for other in members[1:]:
            if (
                base.labels[max(l - 1, 0) : P] != other.labels[max(l - 1, 0) : P]
                or base.verts[l : P + 1] != other.verts[l : P + 1]
            ):
                pair = tuple(sorted((base.labels, other.labels)))
                break
        if pair:
            break
    checks.append(
        CheckResult(
            "tail-separation",
            pair is None,
            pair,
            "" if pair is None else "equal images but tails differ from position %d" % l,
        )
    )

    ok_bound = L >= l + d - 1
    pair = None
    if ok_bound:
        classes = {}
        for frag, img in images.items():
            key = (frag.labels[:L], frag.verts[L])
            ref = classes.get(key)
            if ref is None:
                classes[key] = (frag, img)
            elif not _agree(ref[1], img, min(l, len(img.labels))):
                pair = tuple(sorted((ref[0].labels, frag.labels)))
                break
    checks.append(
        CheckResult(
            "recoding",
            ok_bound and pair is None,
            pair,
            ""
            if ok_bound and pair is None
            else (
                "recode-bound below window+inj-window-1"
                if not ok_bound
                else "image head is not constant on a square class"
            ),
        )
    )
    return EquivalenceReport(
        "two-sided", tuple(checks), notes=(("D", D), ("M", 0), ("N", l))
    )


# -- past classes and the stabilized transport ------------------------------


@dataclass(frozen=True)
class PastClasses:
    """Partition of the depth-``level`` past words at each vertex.

    ``classes[v]`` lists the classes at ``v_v^level``, each a
    lexicographically sorted tuple of words; two words are equivalent
    when some common tail gives them equal images under the code.
    ``transitive_ok`` records that the raw pairwise relation already
    was an equivalence (it must be, for a valid certificate).
    """

    level: int
    classes: dict
    transitive_ok: bool

    def locate(self, v, word):
        """(position inside its class, class size) of a past word."""
        for cls in self.classes[v]:
            if word in cls:
                return cls.index(word), len(cls)
        raise KeyError((v, word))

    def interleave(self, v, word, n):
        """Residue-class embedding: position + size * n."""
        t, r = self.locate(v, word)
        return t + r * n


def _tails_from(lgs, level, index, length):
    out = []

    def rec(lvl, j, labels, verts):
        if len(labels) == length:
            out.append((tuple(labels), tuple(verts)))
            return
        for (_, a, t) in lgs.out_edges(lvl, j):
            labels.append(a)
            verts.append(t)
            rec(lvl + 1, t, labels, verts)
            labels.pop()
            verts.pop()

    rec(level, index, [], [])
    return out


def past_equivalence_classes(lgs1, cert, L):
    """Group the depth-``L`` pasts at each level-``L`` vertex by image behavior.

    Two past words are related when some common admissible tail gives
    the two completed fragments equal images under the certificate
    code; the pairwise relation is merged into classes and then checked
    to have been transitive already (``transitive_ok``).
    """
    psi = cert.psi0
    if psi.source is not lgs1:
        raise ValueError("certificate code was built for a different system")
    T = lgs1.depth
    if T < L + psi.window:
        raise DepthBudgetError(L + psi.window, T, "past classes")
    lgs1.require_left_resolving("past classes")
    out = {}
    transitive = True
    for v in lgs1.vertex_range(L):
        words_here = sorted(
            {w for (w, i) in _squares(lgs1, L) if i == v}, key=lgs1.word_key
        )
        prefix = {}
        for w in words_here:
            trace = lgs1.backward_path(w, L, v)
            prefix[w] = tuple(
                lgs1.project(j, trace[j], j) for j in range(L + 1)
            )
        tails = _tails_from(lgs1, L, v, T - L)
        img = {}
        for w in words_here:
            per_tail = []
            for (tl, tv) in tails:
                frag = Fragment(w + tl, prefix[w] + tv)
                try:
                    per_tail.append(psi.apply(frag))
                except (CodeApplicationError, CodeResolutionError):
                    per_tail.append(None)
            img[w] = per_tail
        related = {
            (a, b)
            for a in words_here
            for b in words_here
            if any(
                x is not None and x == y for x, y in zip(img[a], img[b])
            )
        }
        # union-find via repeated merging; then verify the raw relation
        classes = []
        for w in words_here:
            home = None
            for cls in classes:
                if any((w, u) in related for u in cls):
                    home = cls
                    break
            if home is None:
                classes.append([w])
            else:
                home.append(w)
        merged = True
        while merged:
            merged = False
            for i in range(len(classes)):
                for j in range(i + 1, len(classes)):
                    if any((a, b) in related for a in classes[i] for b in classes[j]):
                        classes[i].extend(classes[j])
                        del classes[j]
                        merged = True
                        break
                if merged:
                    break
        for cls in classes:
            for a in cls:
                for b in cls:
                    if (a, b) not in related:
                        transitive = False
        out[v] = tuple(
            tuple(sorted(cls, key=lgs1.word_key))
            for cls in sorted(classes, key=lambda c: lgs1.word_key(min(c, key=lgs1.word_key)))
        )
    return PastClasses(level=L, classes=out, transitive_ok=transitive)


def _deepen_pieces(lgs, b, t):
    if b.level + t > lgs.depth:
        raise DepthBudgetError(b.level + t, lgs.depth, "bisection refinement")
    if not is_admissible(lgs, b):
        return []
    cur = [b]
    for _ in range(t):
        nxt = []
        for piece in cur:
            for (_, a, j) in lgs.out_edges(piece.level, piece.index):
                nxt.append(
                    BasicBisection(piece.mu + (a,), piece.level + 1, j, piece.nu + (a,))
                )
        cur = nxt
    return cur


def _prefix_fragment(lgs, word, level, index):
    trace = lgs.backward_path(word, level, index)
    if trace is None:
        return None
    base = level - len(word)
    verts = tuple(lgs.project(base + j, trace[j], j) for j in range(len(word) + 1))
    return Fragment(tuple(word), verts)


def _cocycle_sum(lgs, fun, frag, steps):
    total = 0
    cur = frag
    for _ in range(steps):
        total += fun(cur)
        cur = shift_fragment(lgs, cur)
    return total


def _rule_at(code, frag, i):
    key = window_of(code.source, frag, i, code.window)
    rule = code.rules.get(key)
    if rule is None:
        raise CodeApplicationError(
            "no rule for the window (%s, %d)" % (format_word(key[0]), key[1])
        )
    return rule


def _meet_vertex(code, frag, length, lam2, back):
    """Vertex data of the image tail: its starting vertex at level ``lam2``.

    The tail of the image starts after ``length`` output positions; its
    start vertex is one backward step (along the next output symbol)
    from the position-``(length+1)`` image vertex at level ``lam2 + 1``.
    That vertex in turn comes from the declared selector ``back``
    positions further on, traced backwards through the output symbols;
    when the selector level is too shallow the lift must be unambiguous.
    """
    tgt = code.target
    sel = _rule_at(code, frag, length + 1 + back)[1]
    if back > 0:
        word = tuple(_rule_at(code, frag, length + 1 + i)[0] for i in range(1, back + 1))
        trace = tgt.backward_path(word, code.sel_level, sel)
        if trace is None:
            raise ValueError("image selectors do not chain into a path")
        top = trace[0]
    else:
        top = code._to_level(sel, lam2 + 1)
    beta = _rule_at(code, frag, length + 1)[0]
    srcs = tgt.in_sources(lam2, top, beta)
    if not srcs:
        return None
    return srcs[0]


def _transport_detailed(code, kf, lf, b, min_prefix=0):
    """Transport one basic triple through a code along the exponent data.

    Returns ``(piece, x_key, z_key)`` records where the keys are the
    depth-``min_prefix`` square windows of the two sides (empty tuples
    when ``min_prefix`` is 0); used by both the orbit-equivalence
    transport and the stabilized one.  The triple is refined until the
    exponent sums and all needed image data are constant per piece, and
    each refined piece contributes the image words of the declared
    lengths plus the image tail vertex at level ``max`` of those.
    """
    lgs1, lgs2 = code.source, code.target
    lgs1.require_left_resolving("groupoid transport")
    lgs2.require_left_resolving("groupoid transport")
    if not is_admissible(lgs1, b):
        return []
    p, q = len(b.mu), len(b.nu)
    d = code.window
    t0 = max(d, kf.window, lf.window, min_prefix - min(p, q), 1)
    out = []
    for piece in _deepen_pieces(lgs1, b, t0):
        x = _prefix_fragment(lgs1, piece.mu, piece.level, piece.index)
        z = _prefix_fragment(lgs1, piece.nu, piece.level, piece.index)
        L = _cocycle_sum(lgs1, lf, x, p) + _cocycle_sum(lgs1, kf, z, q)
        M = _cocycle_sum(lgs1, lf, z, q) + _cocycle_sum(lgs1, kf, x, p)
        if L < 0 or M < 0:
            raise ValueError("transport reached a negative image length")
        lam2 = max(b.level, L, M)
        if lam2 + 1 > lgs2.depth:
            raise DepthBudgetError(lam2 + 1, lgs2.depth, "groupoid transport")
        back = max(0, code.sel_level - (lam2 + 1))
        extra = max(0, L + back + d - len(x.labels), M + back + d - len(z.labels))
        for final in _deepen_pieces(lgs1, piece, extra):
            xf = _prefix_fragment(lgs1, final.mu, final.level, final.index)
            zf = _prefix_fragment(lgs1, final.nu, final.level, final.index)
            mu2 = tuple(_rule_at(code, xf, i)[0] for i in range(1, L + 1))
            nu2 = tuple(_rule_at(code, zf, i)[0] for i in range(1, M + 1))
            wx = _meet_vertex(code, xf, L, lam2, back)
            wz = _meet_vertex(code, zf, M, lam2, back)
            if wx != wz:
                raise ValueError(
                    "certificate maps the shared tail of %s inconsistently" % (b,)
                )
            if wx is None:
                continue
            img = BasicBisection(mu2, lam2, wx, nu2)
            if not is_admissible(lgs2, img):
                raise ValueError("certificate produced an inadmissible image %s" % (img,))
            xkey = window_of(lgs1, xf, 1, min_prefix)
            zkey = window_of(lgs1, zf, 1, min_prefix)
            out.append((img, xkey, zkey))
    return out


class GroupoidMap:
    """Lazy piecewise transport of basic triples through a certificate.

    Subscripting with a basic triple of the source system returns the
    tuple of image triples over the target; ``keys()`` enumerates the
    depth-``depth`` universe on which the map is guaranteed defined.
    Built by :func:`coe_to_groupoid_iso`, which checks the certificate
    first.
    """

    def __init__(self, cert, depth):
        self.cert = cert
        self.depth = depth
        self.source = cert.forward.source
        self.target = cert.forward.target
        self._cache = {}

    def keys(self):
        return tuple(
            b for b in enumerate_elements(self.source, self.depth)
            if is_admissible(self.source, b)
        )

    def __iter__(self):
        return iter(self.keys())

    def __getitem__(self, b):
        got = self._cache.get(b)
        if got is None:
            recs = _transport_detailed(self.cert.forward, self.cert.k1, self.cert.l1, b)
            got = tuple(sorted({r[0] for r in recs}))
            self._cache[b] = got
        return got


def coe_to_groupoid_iso(cert, D):
    """The groupoid transport of a passing orbit-equivalence certificate.

    Refuses (raises ``ValueError``) unless the certificate passes
    :func:`check_coe` at depth ``D``.  The returned mapping sends each
    basic triple to the pieces of its image; on every refinement fine
    enough to pin the exponent sums, the image words are read off the
    code and the shared-tail vertex is carried along, so the piece list
    realizes the pointwise map exactly at truncation scale.
    """
    lgs1 = cert.forward.source
    lgs2 = cert.forward.target
    report = check_coe(lgs1, lgs2, cert, D)
    if not report.ok:
        failed = ", ".join(c.name for c in report.checks if not c.ok)
        raise ValueError(
            "certificate fails the orbit-equivalence check (%s); refusing transport" % failed
        )
    return GroupoidMap(cert, D)


def check_groupoid_iso(phi, lgs1, lgs2, D, preserve=None, max_pairs=200, seed=0):
    """Test a piecewise map of basic triples for groupoid-morphism laws.

    ``phi`` maps (by subscription) each basic triple of the first
    system to a tuple of basic triples of the second.  Checks:
    functoriality (the image of a product equals the product of the
    images, compared exactly as algebra elements over the second
    system), preservation of inverses and of the unit shape, and that
    the images of the depth-``D`` unit partition again partition the
    unit (bijectivity at depth ``D``).  When ``preserve`` is given as a
    pair of symbol-weight tables (``None`` entries meaning the plain
    length cocycle), per-piece preservation of the weighted cocycle is
    checked as well.  Composable pairs are sampled deterministically
    when there are more than ``max_pairs`` of them.
    """
    elements = [b for b in enumerate_elements(lgs1, D) if is_admissible(lgs1, b)]
    images = {b: tuple(phi[b]) for b in elements}

    def as_element(pieces):
        e = algebra.zero(lgs2)
        for c in pieces:
            e = e + algebra.partial_isometry(lgs2, c.mu, c.level, c.index, c.nu)
        return e

    checks = []
    composable = []
    for b1 in elements:
        for b2 in elements:
            try:
                prod = compose(lgs1, b1, b2)
            except DepthBudgetError:
                continue
            if prod:
                composable.append((b1, b2, prod))
    if len(composable) > max_pairs:
        composable = random.Random(seed).sample(composable, max_pairs)
    bad = None
    skipped = 0
    for (b1, b2, prod) in composable:
        try:
            lhs = algebra.zero(lgs2)
            for c in prod:
                lhs = lhs + as_element(phi[c])
        except DepthBudgetError:
            skipped += 1
            continue
        rhs = as_element(images[b1]) * as_element(images[b2])
        if not lhs.equals(rhs):
            bad = (str(b1), str(b2))
            break
    checks.append(
        CheckResult(
            "functorial",
            bad is None,
            bad,
            "" if not skipped else "%d products beyond the depth budget skipped" % skipped,
        )
    )

    bad = None
    for b in elements:
        if not as_element(images[b]).adjoint().equals(as_element(tuple(phi[inverse(b)]))):
            bad = str(b)
            break
    checks.append(CheckResult("inverse-preserving", bad is None, bad, ""))

    units = [b for b in elements if b.mu == b.nu and len(b.mu) == D]
    bad = None
    for u in units:
        if any(c.mu != c.nu for c in images[u]):
            bad = str(u)
            break
    checks.append(CheckResult("unit-shape", bad is None, bad, ""))

    total = algebra.zero(lgs2)
    for u in units:
        total = total + as_element(images[u])
    ok = total.equals(algebra.unit(lgs2))
    detail = "" if ok else "unit images do not sum to 1"
    if ok:
        for i in range(len(units)):
            for j in range(i + 1, len(units)):
                prod = as_element(images[units[i]]) * as_element(images[units[j]])
                if not prod.is_zero():
                    ok = False
                    detail = "unit images overlap"
                    break
            if not ok:
                break
    checks.append(CheckResult("unit-partition", ok, None, detail))

    if preserve is not None:
        weights1, weights2 = preserve
        bad = None
        for b in elements:
            want = cocycle_value(weights1, b)
            for c in images[b]:
                if cocycle_value(weights2, c) != want:
                    bad = (str(b), str(c))
                    break
            if bad:
                break
        checks.append(CheckResult("cocycle", bad is None, bad, ""))
    return EquivalenceReport("groupoid-iso", tuple(checks), notes=(("D", D),))


class StableIso:
    """Stabilized transport built from a passing two-sided certificate.

    Acts as a mapping on stabilized triples: subscripting with a
    ``StableBisection`` lists the image pieces, with the stabilization
    coordinates pushed through the residue-class embeddings of the past
    classes.  ``base`` is the plain degree-preserving transport of
    basic triples, ``g`` the per-past embedding of the nonnegative
    integers, ``xi`` the embedding on (fragment, coordinate) pairs, and
    ``verify`` samples the stable universe for the morphism laws.
    """

    def __init__(self, cert, classes, depth):
        self.cert = cert
        self.classes = classes
        self.depth = depth
        src = cert.psi0.source
        self._k = CylinderFunction(src, 0, const=0)
        self._l = CylinderFunction(src, 0, const=1)
        self._cache = {}

    def base(self, b):
        recs = _transport_detailed(self.cert.psi0, self._k, self._l, b)
        return tuple(sorted({r[0] for r in recs}))

    def g(self, v, word, n):
        return self.classes.interleave(v, word, n)

    def __getitem__(self, s):
        got = self._cache.get(s)
        if got is None:
            recs = _transport_detailed(
                self.cert.psi0, self._k, self._l, s.base,
                min_prefix=self.cert.recode_bound,
            )
            out = set()
            for (img, (xw, xv), (zw, zv)) in recs:
                out.add(
                    StableBisection(
                        img,
                        self.classes.interleave(xv, xw, s.p),
                        self.classes.interleave(zv, zw, s.q),
                    )
                )
            got = tuple(sorted(out))
            self._cache[s] = got
        return got

    def xi(self, frag, p):
        src = self.cert.psi0.source
        key = window_of(src, frag, 1, self.cert.recode_bound)
        return self.cert.psi0.apply(frag), self.classes.interleave(key[1], key[0], p)

    def verify(self, samples=500, seed=0, pmax=4, base_depth=2, cover=1000):
        """Sampled morphism laws of the stabilized transport.

        Exhaustive where cheap: the residue decomposition partitions
        ``0..cover-1`` for every class, and ``xi`` is injective across
        all (full-depth fragment, coordinate <= pmax+2) pairs.  Sampled
        (deterministically, ``samples`` draws): cocycle preservation of
        single elements and functoriality on composable pairs.
        """
        lgs1 = self.cert.psi0.source
        lgs2 = self.cert.psi0.target
        rng = random.Random(seed)
        checks = []

        bad = None
        for v, fam in sorted(self.classes.classes.items()):
            for cls in fam:
                r = len(cls)
                seen = {}
                for t in range(r):
                    for n in range(cover):
                        val = t + r * n
                        if val < cover:
                            if val in seen:
                                bad = (v, cls[t])
                            seen[val] = cls[t]
                if len(seen) != cover and bad is None:
                    bad = (v, cls[0])
                if bad:
                    break
            if bad:
                break
        checks.append(
            CheckResult(
                "decomposition",
                bad is None,
                bad,
                "" if bad is None else "residue sets do not partition 0..%d" % (cover - 1),
            )
        )

        seen = {}
        bad = None
        for frag in all_fragments(lgs1):
            for p in range(pmax + 3):
                key = self.xi(frag, p)
                if key in seen and seen[key] != (frag, p):
                    bad = (seen[key][0].labels, (frag.labels, p))
                    break
                seen[key] = (frag, p)
            if bad:
                break
        checks.append(CheckResult("xi-injective", bad is None, bad, ""))

        universe = [
            b for b in enumerate_elements(lgs1, min(base_depth, lgs1.depth))
            if is_admissible(lgs1, b)
        ]
        stables = [
            StableBisection(b, rng.randrange(pmax + 1), rng.randrange(pmax + 1))
            for b in universe
        ]
        while len(stables) < samples:
            stables.append(
                StableBisection(
                    rng.choice(universe), rng.randrange(pmax + 1), rng.randrange(pmax + 1)
                )
            )
        stables = stables[:samples]
        bad = None
        for s in stables:
            want = stable_cocycle(None, s, "lift")
            for piece in self[s]:
                if stable_cocycle(None, piece, "lift") != want:
                    bad = (str(s), str(piece))
                    break
            if bad:
                break
        checks.append(CheckResult("stable-cocycle", bad is None, bad, ""))

        def grouped(pieces):
            out = {}
            for s in pieces:
                e = out.get((s.p, s.q), algebra.zero(lgs2))
                out[(s.p, s.q)] = e + algebra.partial_isometry(
                    lgs2, s.base.mu, s.base.level, s.base.index, s.base.nu
                )
            return out

        pairs = []
        for s1 in stables:
            for s2 in stables:
                if s1.q == s2.p and compose(lgs1, s1.base, s2.base):
                    pairs.append((s1, s2))
        if len(pairs) > samples:
            pairs = rng.sample(pairs, samples)
        bad = None
        for (s1, s2) in pairs:
            lhs = {}
            for piece in stable_compose(lgs1, s1, s2):
                for (img, grp) in grouped(self[piece]).items():
                    cur = lhs.get(img, algebra.zero(lgs2))
                    lhs[img] = cur + grp
            rhs = {}
            for i1 in self[s1]:
                for i2 in self[s2]:
                    if i1.q != i2.p:
                        continue
                    for (img, grp) in grouped(stable_compose(lgs2, i1, i2)).items():
                        cur = rhs.get(img, algebra.zero(lgs2))
                        rhs[img] = cur + grp
            lhs = {k: v for (k, v) in lhs.items() if not v.is_zero()}
            rhs = {k: v for (k, v) in rhs.items() if not v.is_zero()}
            if set(lhs) != set(rhs) or any(not lhs[k].equals(rhs[k]) for k in lhs):
                bad = (str(s1), str(s2))
                break
        checks.append(CheckResult("stable-functorial", bad is None, bad, ""))
        return EquivalenceReport("stable-iso", tuple(checks))


def build_stable_iso(lgs1, lgs2, cert, D):
    """Stabilized transport bundle for a passing two-sided certificate.

    Runs :func:`check_two_sided` at depth ``D`` and refuses on failure;
    then computes the past classes at the recoding bound and returns
    the mapping object.
    """
    report = check_two_sided(lgs1, lgs2, cert, D)
    if not report.ok:
        failed = ", ".join(c.name for c in report.checks if not c.ok)
        raise ValueError(
            "certificate fails the two-sided check (%s); refusing transport" % failed
        )
    classes = past_equivalence_classes(lgs1, cert, cert.recode_bound)
    return StableIso(cert, classes, D)
