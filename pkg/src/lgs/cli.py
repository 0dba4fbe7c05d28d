"""Command-line front end.

One executable, ``lgs``, with a subcommand per library capability:
structure validation, language enumeration, symbolic matrix checks,
algebra evaluation, groupoid arithmetic, and certificate checking.

Exit status: 0 pass, 1 fail, 2 usage or input error, 3 depth budget
exceeded.  ``--format records`` switches output to ``key<TAB>value``
lines for scripting; the default ``plain`` is meant for humans.
"""

from __future__ import annotations

import argparse
import re
import sys

from .algebra import parse_expression, verify_relations
from .core import DepthBudgetError, LabeledGraph, LambdaGraphSystem
from .equivalence import (
    build_stable_iso,
    certificate_from_spec,
    check_coe,
    check_eventual_conjugacy,
    check_groupoid_iso,
    check_two_sided,
    coe_to_groupoid_iso,
)
from .groupoid import bisection, cocycle_value, compose, enumerate_elements
from .io import (
    CertificateSpec,
    FormatError,
    format_vertex,
    format_word,
    load_path,
    parse_vertex_token,
    serialize_sms,
    tokenize_word,
)
from .language import check_condition_i, check_essential_freeness, words
from .sms import SymbolicMatrixSystem, from_lgs

__all__ = ["main", "run", "CommandResult"]


class CommandResult:
    """Outcome of one invocation: exit status plus the printed text."""

    def __init__(self, status, lines):
        self.status = status
        self.lines = tuple(lines)

    @property
    def text(self):
        return "\n".join(self.lines)


class _Usage(Exception):
    """Input-level failure (bad file, bad spec); rendered on stderr."""


class _Out:
    """Collects output lines, honoring the plain/records switch."""

    def __init__(self, fmt):
        self.fmt = fmt
        self.lines = []

    def line(self, key, value, plain=None):
        if self.fmt == "records":
            self.lines.append("%s\t%s" % (key, value))
        else:
            self.lines.append(str(value) if plain is None else plain)

    def raw(self, text):
        # Pre-formatted block; used for document dumps in either mode.
        self.lines.extend(text.splitlines())


def _compact(obj):
    if isinstance(obj, tuple):
        if all(isinstance(x, str) for x in obj):
            return format_word(obj)
        return "(" + ", ".join(_compact(x) for x in obj) + ")"
    return str(obj)


def _load(path, want, what):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise _Usage("%s: %s" % (path, e.strerror or e))
    try:
        obj = load_path(path)
    except FormatError as e:
        raise _Usage("%s:%d:%d: %s" % (path, e.line, e.col, e.msg))
    del text
    if not isinstance(obj, want):
        raise _Usage("%s: expected a %s document" % (path, what))
    return obj


def _load_lgs(path):
    obj = _load(path, (LambdaGraphSystem, LabeledGraph), "lambda-graph system")
    if isinstance(obj, LabeledGraph):
        raise _Usage("%s: a labeled graph must be expanded to a leveled system first" % path)
    return obj


def _emit_report(rep, out):
    for c in rep.checks:
        out.line("check", "%s %s" % (c.name, "PASS" if c.ok else "FAIL"))
        if not c.ok and c.witness is not None:
            out.line("witness", "%s %s" % (c.name, _compact(c.witness)))
        if c.detail:
            out.line("detail", "%s %s" % (c.name, c.detail))
    for k, v in rep.notes:
        out.line("note", "%s=%s" % (k, v))
    out.line("result", "PASS" if rep.ok else "FAIL")
    return 0 if rep.ok else 1


_ELEMENT_RE = re.compile(r"^(.*),(v\(\s*\d+\s*,\s*\d+\s*\)),(.*)$")


def _parse_element(lgs, text):
    m = _ELEMENT_RE.match(text.strip())
    if not m:
        raise _Usage("element spec %r is not mu,v(l,i),nu" % text)
    try:
        l, i = parse_vertex_token(m.group(2))
        mu = tokenize_word(lgs.alphabet, m.group(1))
        nu = tokenize_word(lgs.alphabet, m.group(3))
        return bisection(lgs, mu, l, i, nu)
    except (FormatError, ValueError) as e:
        raise _Usage("element spec %r: %s" % (text, e))


# -- subcommand handlers -------------------------------------------------


def _cmd_validate(args, out):
    lgs = _load_lgs(args.file)
    rep = lgs.validate()
    if rep.ok:
        out.line("status", "ok")
        return 0
    out.line("status", "fail")
    for v in rep.violations:
        out.line("violation", "%s %s: %s" % (v.rule, v.location, v.detail))
    return 1


def _cmd_words(args, out):
    lgs = _load_lgs(args.file)
    for w in words(lgs, args.k):
        out.line("word", format_word(w))
    return 0


def _cmd_matrices(args, out):
    lgs = _load_lgs(args.file)
    levels = range(lgs.depth) if args.level is None else [args.level]
    for l in levels:
        if not 0 <= l < lgs.depth:
            raise _Usage("level %d outside 0..%d" % (l, lgs.depth - 1))
        for i in lgs.vertex_range(l):
            row = {}
            for (_, sym, j) in lgs.out_edges(l, i):
                row.setdefault(j, []).append(sym)
            cells = []
            for j in lgs.vertex_range(l + 1):
                cells.append("+".join(sorted(row.get(j, []))) or "0")
            out.line("M%d" % l, "%d %s" % (i, " ".join(cells)))
        for i in lgs.vertex_range(l):
            hits = {j for j in lgs.vertex_range(l + 1) if lgs.iota[l][j - 1] == i}
            out.line(
                "I%d" % l,
                "%d %s" % (i, " ".join("1" if j in hits else "0" for j in lgs.vertex_range(l + 1))),
            )
    return 0


def _sms_of(path):
    obj = _load(path, (LambdaGraphSystem, SymbolicMatrixSystem), "system or matrix")
    return from_lgs(obj) if isinstance(obj, LambdaGraphSystem) else obj


def _cmd_sms_check(args, out):
    s = _sms_of(args.file)
    bad = s.compatibility_mismatches()
    levels = {m.level for m in bad}
    for l in range(s.depth - 1):
        out.line("level", "%d %s" % (l, "FAIL" if l in levels else "PASS"))
    for m in bad:
        out.line("mismatch", str(m))
    return 1 if bad else 0


def _cmd_sms_dump(args, out):
    out.raw(serialize_sms(_sms_of(args.file)))
    return 0


def _cmd_cond_i(args, out):
    lgs = _load_lgs(args.file)
    rep = check_condition_i(lgs, args.depth)
    out.line("status", "PASS" if rep.satisfied else "FAIL")
    for v, g in sorted(rep.failures, key=lambda f: (f[0].level, f[0].index)):
        out.line("failure", "%s futures=%d" % (format_vertex(v.level, v.index), len(g)))
    return 0 if rep.satisfied else 1


def _cmd_ess_free(args, out):
    lgs = _load_lgs(args.file)
    rep = check_essential_freeness(lgs, args.m, args.n, args.depth)
    out.line("verdict", rep.verdict)
    for c in sorted(rep.unresolved(), key=lambda c: (lgs.word_key(c.word), c.index)):
        out.line("unresolved", "%s,%s" % (format_word(c.word), format_vertex(rep.n, c.index)))
    return 0 if rep.verdict == "CERTIFIED" else 1


def _cmd_algebra(args, out):
    lgs = _load_lgs(args.file)
    for pos, text in enumerate(args.expr):
        if pos:
            out.line("expr", "--")
        try:
            elt = parse_expression(lgs, text).canonical()
        except ValueError as exc:
            # ExpressionError and out-of-range vertices; budget errors pass through.
            raise _Usage("expression %r: %s" % (text, exc))
        out.raw(elt.format())
    return 0


def _cmd_relations(args, out):
    lgs = _load_lgs(args.file)
    rep = verify_relations(lgs, args.level)
    for c in rep.checks:
        out.line("check", "%s %s" % (c.name, "PASS" if c.ok else "FAIL"))
        if not c.ok and c.detail:
            out.line("detail", "%s %s" % (c.name, c.detail))
    out.line("result", "PASS" if rep.ok else "FAIL")
    return 0 if rep.ok else 1


def _cmd_groupoid_compose(args, out):
    lgs = _load_lgs(args.file)
    b1 = _parse_element(lgs, args.first)
    b2 = _parse_element(lgs, args.second)
    pieces = compose(lgs, b1, b2)
    if not pieces:
        out.line("pieces", "0")
        return 0
    for p in pieces:
        out.line("piece", "%s c=%d" % (p, cocycle_value(None, p)))
    return 0


def _cmd_groupoid_enumerate(args, out):
    lgs = _load_lgs(args.file)
    for b in enumerate_elements(lgs, args.depth):
        out.line("element", str(b))
    return 0


def _cert_inputs(args, kind):
    lgs1 = _load_lgs(args.system1)
    lgs2 = _load_lgs(args.system2)
    spec = _load(args.cert, CertificateSpec, "certificate")
    try:
        cert = certificate_from_spec(spec, lgs1, lgs2, kind)
    except (ValueError, FormatError) as e:
        raise _Usage("%s: %s" % (args.cert, e))
    return lgs1, lgs2, cert


def _cmd_coe_check(args, out):
    lgs1, lgs2, cert = _cert_inputs(args, "coe")
    return _emit_report(check_coe(lgs1, lgs2, cert, args.depth), out)


def _cmd_ec_check(args, out):
    lgs1, lgs2, cert = _cert_inputs(args, "ec")
    return _emit_report(check_eventual_conjugacy(lgs1, lgs2, cert, args.depth), out)


def _cmd_conj_check(args, out):
    lgs1, lgs2, cert = _cert_inputs(args, "two-sided")
    return _emit_report(check_two_sided(lgs1, lgs2, cert, args.depth), out)


def _cmd_coe_iso(args, out):
    lgs1, lgs2, cert = _cert_inputs(args, "coe")
    try:
        phi = coe_to_groupoid_iso(cert, args.depth)
    except ValueError as e:
        out.line("result", "FAIL")
        out.line("reason", str(e))
        return 1
    preserve = (None, None) if args.check_cocycle else None
    rep = check_groupoid_iso(
        phi, lgs1, lgs2, args.depth, preserve=preserve, max_pairs=args.max_pairs, seed=args.seed
    )
    out.line("elements", str(len(phi.keys())), plain="domain elements: %d" % len(phi.keys()))
    return _emit_report(rep, out)


def _cmd_stable_iso(args, out):
    lgs1, lgs2, cert = _cert_inputs(args, "two-sided")
    try:
        iso = build_stable_iso(lgs1, lgs2, cert, args.depth)
    except ValueError as e:
        out.line("result", "FAIL")
        out.line("reason", str(e))
        return 1
    rep = iso.verify(samples=args.samples, seed=args.seed)
    return _emit_report(rep, out)


# -- argument wiring -----------------------------------------------------


def _build_parser():
    top = argparse.ArgumentParser(
        prog="lgs", description="Work with labeled leveled transition systems."
    )
    sub = top.add_subparsers(dest="command", metavar="COMMAND")

    def cmd(name, handler, help):
        p = sub.add_parser(name, help=help)
        p.set_defaults(handler=handler)
        p.add_argument(
            "--format", choices=("plain", "records"), default="plain", help="output style"
        )
        return p

    p = cmd("validate", _cmd_validate, "check the structural axioms")
    p.add_argument("file")

    p = cmd("words", _cmd_words, "list admissible words of one length")
    p.add_argument("file")
    p.add_argument("-k", type=int, required=True, help="word length")

    p = cmd("matrices", _cmd_matrices, "print the label and projection matrices")
    p.add_argument("file")
    p.add_argument("-l", "--level", type=int, default=None)

    p = cmd("sms-check", _cmd_sms_check, "check the intertwining identity per level")
    p.add_argument("file")

    p = cmd("sms-dump", _cmd_sms_dump, "dump the symbolic matrix document")
    p.add_argument("file")

    p = cmd("cond-i", _cmd_cond_i, "check follower separation at a look-ahead")
    p.add_argument("file")
    p.add_argument("-d", "--depth", type=int, required=True)

    p = cmd("ess-free", _cmd_ess_free, "certify cylinder-wise aperiodicity")
    p.add_argument("file")
    p.add_argument("-m", type=int, required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-d", "--depth", type=int, required=True)

    p = cmd("algebra", _cmd_algebra, "normalize *-algebra expressions")
    p.add_argument("file")
    p.add_argument("-e", "--expr", action="append", required=True, help="expression (repeatable)")

    p = cmd("relations", _cmd_relations, "verify the generator relations at a level")
    p.add_argument("file")
    p.add_argument("-l", "--level", type=int, required=True)

    p = cmd("groupoid-compose", _cmd_groupoid_compose, "compose two basic pieces")
    p.add_argument("file")
    p.add_argument("first", metavar="'mu,v(l,i),nu'")
    p.add_argument("second", metavar="'mu2,v(l2,j),nu2'")

    p = cmd("groupoid-enumerate", _cmd_groupoid_enumerate, "list basic pieces at a depth")
    p.add_argument("file")
    p.add_argument("-d", "--depth", type=int, required=True)

    def certcmd(name, handler, help):
        p = cmd(name, handler, help)
        p.add_argument("system1")
        p.add_argument("system2")
        p.add_argument("cert")
        p.add_argument("-d", "--depth", type=int, required=True, help="working depth")
        return p

    certcmd("coe-check", _cmd_coe_check, "check a continuous orbit equivalence certificate")
    certcmd("ec-check", _cmd_ec_check, "check an eventual conjugacy certificate")
    certcmd("conj-check", _cmd_conj_check, "check a two-sided conjugacy certificate")

    p = certcmd("coe-iso", _cmd_coe_iso, "transport the certificate to a groupoid map")
    p.add_argument("--check-cocycle", action="store_true", help="also require degree matching")
    p.add_argument("--max-pairs", type=int, default=200)
    p.add_argument("--seed", type=int, default=0, help="sampling seed (default 0)")

    p = certcmd("stable-iso", _cmd_stable_iso, "verify the stabilized isomorphism")
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0, help="sampling seed (default 0)")

    return top


def run(argv):
    """Execute one invocation and collect its output without printing."""
    parser = _build_parser()
    # An element spec whose mu is the empty word starts with "-", which
    # argparse would read as a flag; respell it with the accepted "ε".
    argv = ["ε" + t[1:] if t.startswith("-") and _ELEMENT_RE.match(t) else t for t in argv]
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse already printed usage; normalize the status
        return CommandResult(2 if e.code else 0, [])
    if not getattr(args, "handler", None):
        parser.print_usage(sys.stderr)
        return CommandResult(2, [])
    out = _Out(args.format)
    try:
        status = args.handler(args, out)
    except _Usage as e:
        print(str(e), file=sys.stderr)
        return CommandResult(2, out.lines)
    except DepthBudgetError as e:
        print("depth budget: %s" % e, file=sys.stderr)
        return CommandResult(3, out.lines)
    return CommandResult(status, out.lines)


def main(argv=None):
    res = run(sys.argv[1:] if argv is None else argv)
    if res.lines:
        print(res.text)
    return res.status


if __name__ == "__main__":
    sys.exit(main())
