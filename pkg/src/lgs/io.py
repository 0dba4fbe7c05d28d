"""Text formats: systems, graphs, matrix dumps, certificates.

All formats are line based, UTF-8, with ``#`` starting a comment that
runs to the end of the line.  Blank lines are ignored.  Every document
opens with a kind directive (``lgs``, ``graph``, ``sms``, ``cert``) and
closes with ``end``.

System file::

    lgs <name>
    alphabet <sym> <sym> ...
    depth <D>
    vertices <l> <m(l)>          # one line per level 0..D
    edge <l> <i> <sym> <j>       # v_i^l -> v_j^{l+1}
    iota <l> <j> <i>             # projection of v_j^{l+1} is v_i^l
    end

Graph file::

    graph <name>
    state <s>                    # declaration order fixes indices
    edge <s> <sym> <t>
    end

Matrix dump::

    sms <name>
    alphabet <sym> ...
    depth <D>
    size <l> <m(l)>
    entry <l> <i> <j> <sym>[+<sym>...]
    iota <l> <j> <i>
    end

Certificate file: see :func:`parse_cert`.

Words are written as plain symbol concatenation when every symbol is a
single character, and dot-separated otherwise; the empty word is ``-``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core import LabeledGraph, LambdaGraphSystem, LgsError
from .sms import SymbolicMatrixSystem

__all__ = [
    "FormatError",
    "tokenize_word",
    "format_word",
    "parse_vertex_token",
    "format_vertex",
    "parse_cylinder_token",
    "parse_lgs",
    "serialize_lgs",
    "parse_graph",
    "serialize_graph",
    "parse_sms",
    "serialize_sms",
    "CertificateSpec",
    "parse_cert",
    "load_path",
]


class FormatError(LgsError):
    """A document did not match its format; carries line and column."""

    def __init__(self, line, msg, col=1):
        self.line = line
        self.col = col
        self.msg = msg
        super().__init__("line %d: %s" % (line, msg) if line else msg)


def tokenize_word(alphabet, text):
    """Split a word spelled as text into a tuple of symbol names.

    ``-`` denotes the empty word.  A dotted spelling (``ab.c.ab``) is
    split at the dots; otherwise the text must tokenize uniquely by
    concatenation of alphabet symbols, and ambiguity is an error rather
    than a guess.

    >>> tokenize_word(("a", "b"), "ab")
    ('a', 'b')
    >>> tokenize_word(("aa", "b"), "aa.b")
    ('aa', 'b')
    """
    text = text.strip()
    if text in ("-", "", "ε"):
        return ()
    if "." in text:
        parts = tuple(text.split("."))
        for p in parts:
            if p not in alphabet:
                raise FormatError(0, "unknown symbol %r in word %r" % (p, text))
        return parts
    n = len(text)
    # count tokenizations; parses[k] = number of ways to split text[:k]
    parses = [0] * (n + 1)
    back = [None] * (n + 1)
    parses[0] = 1
    for k in range(1, n + 1):
        for a in alphabet:
            la = len(a)
            if la <= k and text[k - la : k] == a and parses[k - la]:
                parses[k] += parses[k - la]
                back[k] = (k - la, a)
    if parses[n] == 0:
        raise FormatError(0, "word %r does not tokenize over %s" % (text, list(alphabet)))
    if parses[n] > 1:
        raise FormatError(0, "word %r is ambiguous; use dots between symbols" % text)
    out = []
    k = n
    while k:
        k, a = back[k]
        out.append(a)
    out.reverse()
    return tuple(out)


def format_word(word):
    """Render a word; inverse of :func:`tokenize_word` for valid words."""
    word = tuple(word)
    if not word:
        return "-"
    if all(len(a) == 1 for a in word):
        return "".join(word)
    return ".".join(word)


_VERTEX_RE = re.compile(r"^v\((\d+),(\d+)\)$")


def parse_vertex_token(text):
    """Parse ``v(l,i)`` into the pair ``(l, i)``."""
    m = _VERTEX_RE.match(text.strip())
    if not m:
        raise FormatError(0, "expected v(l,i), got %r" % text)
    return int(m.group(1)), int(m.group(2))


def format_vertex(l, i):
    return "v(%d,%d)" % (l, i)


def parse_cylinder_token(alphabet, text):
    """Parse ``<word>,v(l,i)`` into ``(word, (l, i))``."""
    # split before the vertex token, not at its internal comma
    head, sep, tail = text.strip().rpartition(",v(")
    if not sep:
        raise FormatError(0, "expected <word>,v(l,i), got %r" % text)
    return tokenize_word(alphabet, head), parse_vertex_token("v(" + tail)


def _lines(text):
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield n, line.split()


def _expect_kind(text, kind):
    it = _lines(text)
    try:
        n, fields = next(it)
    except StopIteration:
        raise FormatError(0, "empty document") from None
    if fields[0] != kind:
        raise FormatError(n, "expected a %r document, found %r" % (kind, fields[0]))
    name = " ".join(fields[1:]) or kind
    return name, n, it


def _int(fields, k, n, what):
    try:
        return int(fields[k])
    except (IndexError, ValueError):
        raise FormatError(n, "expected an integer %s" % what) from None


def parse_lgs(text):
    """Parse a system document into a :class:`LambdaGraphSystem`."""
    name, n0, it = _expect_kind(text, "lgs")
    alphabet = None
    depth = None
    sizes = {}
    edges = []
    iota = {}
    closed = False
    for n, f in it:
        if closed:
            raise FormatError(n, "content after end")
        if f[0] == "alphabet":
            alphabet = tuple(f[1:])
        elif f[0] == "depth":
            depth = _int(f, 1, n, "depth")
        elif f[0] == "vertices":
            sizes[_int(f, 1, n, "level")] = _int(f, 2, n, "size")
        elif f[0] == "edge":
            if len(f) != 5:
                raise FormatError(n, "edge takes <l> <i> <sym> <j>")
            edges.append((n, _int(f, 1, n, "level"), _int(f, 2, n, "source"), f[3], _int(f, 4, n, "target")))
        elif f[0] == "iota":
            if len(f) != 4:
                raise FormatError(n, "iota takes <l> <j> <i>")
            key = (_int(f, 1, n, "level"), _int(f, 2, n, "vertex"))
            if key in iota:
                raise FormatError(n, "projection of v_%d^%d given twice" % (key[1], key[0] + 1))
            iota[key] = _int(f, 3, n, "image")
        elif f[0] == "end":
            closed = True
        else:
            raise FormatError(n, "unknown directive %r" % f[0])
    if not closed:
        raise FormatError(0, "missing end")
    if alphabet is None or depth is None:
        raise FormatError(n0, "alphabet and depth are required")
    if set(sizes) != set(range(depth + 1)):
        raise FormatError(n0, "vertices lines must cover levels 0..%d" % depth)
    level_sizes = [sizes[l] for l in range(depth + 1)]
    edge_lists = [[] for _ in range(depth)]
    for (n, l, i, a, j) in edges:
        if not (0 <= l < depth):
            raise FormatError(n, "edge level %d out of range" % l)
        edge_lists[l].append((i, a, j))
    iota_cols = []
    for l in range(depth):
        col = []
        for j in range(1, level_sizes[l + 1] + 1):
            if (l, j) not in iota:
                raise FormatError(0, "missing iota %d %d" % (l, j))
            col.append(iota[(l, j)])
        iota_cols.append(col)
    try:
        return LambdaGraphSystem(name, alphabet, level_sizes, edge_lists, iota_cols)
    except ValueError as e:
        raise FormatError(0, str(e)) from None


def serialize_lgs(lgs):
    out = ["lgs %s" % lgs.name, "alphabet %s" % " ".join(lgs.alphabet), "depth %d" % lgs.depth]
    for l in range(lgs.depth + 1):
        out.append("vertices %d %d" % (l, lgs.m(l)))
    for l in range(lgs.depth):
        for (i, a, j) in lgs.edges[l]:
            out.append("edge %d %d %s %d" % (l, i, a, j))
    for l in range(lgs.depth):
        for j in lgs.vertex_range(l + 1):
            out.append("iota %d %d %d" % (l, j, lgs.iota_of(l + 1, j)))
    out.append("end")
    return "\n".join(out) + "\n"


def parse_graph(text):
    name, n0, it = _expect_kind(text, "graph")
    states = []
    edges = []
    closed = False
    for n, f in it:
        if closed:
            raise FormatError(n, "content after end")
        if f[0] == "state":
            if len(f) != 2:
                raise FormatError(n, "state takes one name")
            states.append(f[1])
        elif f[0] == "edge":
            if len(f) != 4:
                raise FormatError(n, "edge takes <s> <sym> <t>")
            edges.append((f[1], f[2], f[3]))
        elif f[0] == "end":
            closed = True
        else:
            raise FormatError(n, "unknown directive %r" % f[0])
    if not closed:
        raise FormatError(0, "missing end")
    try:
        return LabeledGraph(name, states, edges)
    except ValueError as e:
        raise FormatError(0, str(e)) from None


def serialize_graph(g):
    out = ["graph %s" % g.name]
    for s in g.states:
        out.append("state %s" % s)
    for (i, a, j) in g.edges:
        out.append("edge %s %s %s" % (g.states[i - 1], a, g.states[j - 1]))
    out.append("end")
    return "\n".join(out) + "\n"


def parse_sms(text):
    import numpy as np

    name, n0, it = _expect_kind(text, "sms")
    alphabet = None
    depth = None
    sizes = {}
    entries = []
    iotas = []
    closed = False
    for n, f in it:
        if closed:
            raise FormatError(n, "content after end")
        if f[0] == "alphabet":
            alphabet = tuple(f[1:])
        elif f[0] == "depth":
            depth = _int(f, 1, n, "depth")
        elif f[0] == "size":
            sizes[_int(f, 1, n, "level")] = _int(f, 2, n, "size")
        elif f[0] == "entry":
            if len(f) != 5:
                raise FormatError(n, "entry takes <l> <i> <j> <syms>")
            entries.append((n, _int(f, 1, n, "level"), _int(f, 2, n, "row"), _int(f, 3, n, "col"), tuple(f[4].split("+"))))
        elif f[0] == "iota":
            if len(f) != 4:
                raise FormatError(n, "iota takes <l> <j> <i>")
            iotas.append((n, _int(f, 1, n, "level"), _int(f, 2, n, "vertex"), _int(f, 3, n, "image")))
        elif f[0] == "end":
            closed = True
        else:
            raise FormatError(n, "unknown directive %r" % f[0])
    if not closed:
        raise FormatError(0, "missing end")
    if alphabet is None or depth is None:
        raise FormatError(n0, "alphabet and depth are required")
    if set(sizes) != set(range(depth + 1)):
        raise FormatError(n0, "size lines must cover levels 0..%d" % depth)
    level_sizes = [sizes[l] for l in range(depth + 1)]
    M = [{} for _ in range(depth)]
    for (n, l, i, j, labels) in entries:
        if not (0 <= l < depth):
            raise FormatError(n, "entry level %d out of range" % l)
        if (i, j) in M[l]:
            raise FormatError(n, "entry (%d,%d) at level %d given twice" % (i, j, l))
        M[l][(i, j)] = tuple(sorted(labels))
    I = [np.zeros((level_sizes[l], level_sizes[l + 1]), dtype=np.int8) for l in range(depth)]
    for (n, l, j, i) in iotas:
        if not (0 <= l < depth):
            raise FormatError(n, "iota level %d out of range" % l)
        if not (1 <= j <= level_sizes[l + 1] and 1 <= i <= level_sizes[l]):
            raise FormatError(n, "iota indices out of range")
        I[l][i - 1, j - 1] = 1
    try:
        return SymbolicMatrixSystem(name, alphabet, level_sizes, M, I)
    except ValueError as e:
        raise FormatError(0, str(e)) from None


def serialize_sms(s):
    out = ["sms %s" % s.name, "alphabet %s" % " ".join(s.alphabet), "depth %d" % s.depth]
    for l in range(s.depth + 1):
        out.append("size %d %d" % (l, s.m(l)))
    for l in range(s.depth):
        for (i, j) in sorted(s.M[l]):
            out.append("entry %d %d %d %s" % (l, i, j, "+".join(s.M[l][(i, j)])))
    for l in range(s.depth):
        for j in range(1, s.m(l + 1) + 1):
            col = s.I[l][:, j - 1]
            for i in range(1, s.m(l) + 1):
                if col[i - 1]:
                    out.append("iota %d %d %d" % (l, j, i))
    out.append("end")
    return "\n".join(out) + "\n"


@dataclass
class CertificateSpec:
    """Raw content of a certificate document.

    Words and vertices stay as text here; they are resolved against the
    two systems by the certificate builders, since only those know the
    alphabets involved.
    """

    name: str
    window: int | None = None
    forward: tuple = ()
    inverse: tuple = ()
    kfun: dict = field(default_factory=dict)
    lfun: dict = field(default_factory=dict)
    K: dict = field(default_factory=dict)
    inj_window: int | None = None
    recode_bound: int | None = None


def parse_cert(text):
    """Parse a certificate document.

    Directives::

        cert <name>
        window <d>                              # forward code window
        code forward <word>,v(l,i) -> <sym> v(l,i)
        code inverse <word>,v(l,i) -> <sym> v(l,i)
        kfun <side> <word>,v(l,i) <int>         # cylinder value
        kfun <side> const <int>                 # constant shorthand
        lfun <side> ...                         # same shapes as kfun
        const K1 <int>                          # eventual-shift exponents
        const K2 <int>
        inj-window <l>
        recode-bound <L>
        end
    """
    name, n0, it = _expect_kind(text, "cert")
    spec = CertificateSpec(name=name)
    forward = []
    inverse = []
    closed = False
    for n, f in it:
        if closed:
            raise FormatError(n, "content after end")
        if f[0] == "window":
            spec.window = _int(f, 1, n, "window")
        elif f[0] == "code":
            if len(f) != 6 or f[1] not in ("forward", "inverse") or f[3] != "->":
                raise FormatError(n, "code takes: forward|inverse <cyl> -> <sym> <vertex>")
            (forward if f[1] == "forward" else inverse).append((f[2], f[4], f[5]))
        elif f[0] in ("kfun", "lfun"):
            side = _int(f, 1, n, "side")
            if side not in (1, 2):
                raise FormatError(n, "side must be 1 or 2")
            store = spec.kfun if f[0] == "kfun" else spec.lfun
            if len(f) == 4 and f[2] == "const":
                store[side] = ("const", _int(f, 3, n, "value"))
            elif len(f) == 4:
                store.setdefault(side, []).append((f[2], _int(f, 3, n, "value")))
            else:
                raise FormatError(n, "%s takes <side> <cyl> <int> or <side> const <int>" % f[0])
        elif f[0] == "const":
            if len(f) != 3 or f[1] not in ("K1", "K2"):
                raise FormatError(n, "const takes K1|K2 <int>")
            spec.K[int(f[1][1])] = _int(f, 2, n, "value")
        elif f[0] == "inj-window":
            spec.inj_window = _int(f, 1, n, "value")
        elif f[0] == "recode-bound":
            spec.recode_bound = _int(f, 1, n, "value")
        elif f[0] == "end":
            closed = True
        else:
            raise FormatError(n, "unknown directive %r" % f[0])
    if not closed:
        raise FormatError(0, "missing end")
    spec.forward = tuple(forward)
    spec.inverse = tuple(inverse)
    return spec


_PARSERS = {"lgs": parse_lgs, "graph": parse_graph, "sms": parse_sms, "cert": parse_cert}


def load_path(path):
    """Load any document, dispatching on its opening directive."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    for _, f in _lines(text):
        kind = f[0]
        break
    else:
        raise FormatError(0, "empty document")
    if kind not in _PARSERS:
        raise FormatError(0, "unknown document kind %r" % kind)
    return _PARSERS[kind](text)
