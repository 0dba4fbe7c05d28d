"""Shared systems, certificates, and fuzzed-input builders."""

import random

import pytest

from lgs import (
    CoeCertificate,
    CylinderFunction,
    EcCertificate,
    LabeledGraph,
    OneSidedCode,
    TwoSidedCertificate,
    WindowTooSmallError,
    canonical_lgs,
    from_labeled_graph,
    full_shift,
)

GM_GRAPH = LabeledGraph(
    "goldenmean", ["1", "2"], [("1", "a", "1"), ("1", "b", "2"), ("2", "g", "1")]
)
EVEN_GRAPH = LabeledGraph("even", ["1", "2"], [("1", "b", "1"), ("1", "a", "2"), ("2", "a", "1")])
# states of BLOCK_GRAPH are the golden-mean edges; its labels are the
# (edge, following edge) pairs, so the 2-block recoding lands here
BLOCK_GRAPH = LabeledGraph(
    "gm2block",
    ["A", "B", "C"],
    [("A", "aa", "A"), ("A", "ab", "B"), ("B", "bg", "C"), ("C", "ga", "A"), ("C", "gb", "B")],
)
# state 2 is absorbing with a single loop: [c] is the one-point set {ccc...}
LOLLIPOP_GRAPH = LabeledGraph(
    "lollipop", ["1", "2"], [("1", "a", "1"), ("1", "b", "2"), ("2", "c", "2")]
)


@pytest.fixture(scope="session")
def full2():
    return full_shift("ab", 5)


@pytest.fixture(scope="session")
def full2_deep():
    return full_shift("ab", 7)


@pytest.fixture(scope="session")
def gm():
    return from_labeled_graph(GM_GRAPH, 5)


@pytest.fixture(scope="session")
def gm_deep():
    return from_labeled_graph(GM_GRAPH, 7)


@pytest.fixture(scope="session")
def even():
    return from_labeled_graph(EVEN_GRAPH, 5)


@pytest.fixture(scope="session")
def even_deep():
    return from_labeled_graph(EVEN_GRAPH, 7)


@pytest.fixture(scope="session")
def even_canonical():
    return canonical_lgs(EVEN_GRAPH, 5, 6)


@pytest.fixture(scope="session")
def block_deep():
    return from_labeled_graph(BLOCK_GRAPH, 7)


@pytest.fixture(scope="session")
def lollipop():
    return from_labeled_graph(LOLLIPOP_GRAPH, 7)


@pytest.fixture(scope="session")
def full3_deep():
    return full_shift("agb", 7, name="full3")


def same_lgs(a, b):
    """Structural equality of two systems, field by field."""
    return (
        a.name == b.name
        and a.alphabet == b.alphabet
        and a.level_sizes == b.level_sizes
        and a.edges == b.edges
        and a.iota == b.iota
    )


# -- certificate builders ------------------------------------------------


def identity_code(lgs):
    rules = {}
    for i in lgs.vertex_range(0):
        for (_, sym, j) in lgs.out_edges(0, i):
            rules[((sym,), j)] = (sym, j)
    return OneSidedCode(lgs, lgs, 1, rules, sel_level=1, name="identity")


def const_coe(lgs, code, k, l):
    return CoeCertificate(
        code.name,
        code,
        code,
        CylinderFunction(lgs, 0, const=k),
        CylinderFunction(lgs, 0, const=l),
        CylinderFunction(lgs, 0, const=k),
        CylinderFunction(lgs, 0, const=l),
    )


def identity_coe(lgs, k=0, l=1):
    return const_coe(lgs, identity_code(lgs), k, l)


def two_block_codes(gm_sys, block_sys):
    fwd = OneSidedCode(
        gm_sys,
        block_sys,
        2,
        {
            (("a", "a"), 1): ("aa", 1),
            (("a", "b"), 2): ("ab", 2),
            (("b", "g"), 1): ("bg", 3),
            (("g", "a"), 1): ("ga", 1),
            (("g", "b"), 2): ("gb", 2),
        },
        sel_level=1,
        name="two-block",
    )
    inv = OneSidedCode(
        block_sys,
        gm_sys,
        1,
        {
            (("aa",), 1): ("a", 1),
            (("ga",), 1): ("g", 1),
            (("ab",), 2): ("a", 1),
            (("gb",), 2): ("g", 1),
            (("bg",), 3): ("b", 2),
        },
        sel_level=1,
        name="two-block-back",
    )
    return fwd, inv


@pytest.fixture(scope="session")
def two_block_coe(gm_deep, block_deep):
    fwd, inv = two_block_codes(gm_deep, block_deep)
    return CoeCertificate(
        "two-block",
        fwd,
        inv,
        CylinderFunction(gm_deep, 0, const=0),
        CylinderFunction(gm_deep, 0, const=1),
        CylinderFunction(block_deep, 0, const=0),
        CylinderFunction(block_deep, 0, const=1),
    )


@pytest.fixture(scope="session")
def two_block_ec(gm_deep, block_deep):
    fwd, inv = two_block_codes(gm_deep, block_deep)
    return EcCertificate("two-block", fwd, inv, 0, 0)


@pytest.fixture(scope="session")
def two_block_two_sided(gm_deep, block_deep):
    fwd, _ = two_block_codes(gm_deep, block_deep)
    return TwoSidedCertificate("two-block", fwd, 1, 2)


@pytest.fixture(scope="session")
def sigma_two_sided(full2_deep):
    # one-step shift as a two-sided conjugacy: window 2, drop the head
    code = OneSidedCode(
        full2_deep,
        full2_deep,
        2,
        {
            (("a", "a"), 1): ("a", 1),
            (("a", "b"), 1): ("b", 1),
            (("b", "a"), 1): ("a", 1),
            (("b", "b"), 1): ("b", 1),
        },
        sel_level=1,
        name="shift",
    )
    return TwoSidedCertificate("shift", code, 2, 3)


@pytest.fixture(scope="session")
def collapse_two_sided(full3_deep, full2_deep):
    # merges the symbols a and g; not injective, so no valid conjugacy
    code = OneSidedCode(
        full3_deep,
        full2_deep,
        1,
        {(("a",), 1): ("a", 1), (("g",), 1): ("a", 1), (("b",), 1): ("b", 1)},
        sel_level=1,
        name="collapse",
    )
    return TwoSidedCertificate("collapse", code, 1, 1)


@pytest.fixture(scope="session")
def lollipop_stretched_coe(lollipop):
    # k==0 with l==2 on the c-cylinder: valid only because [c] is the
    # fixed point, and deliberately not the canonical length data
    code = identity_code(lollipop)
    l1 = CylinderFunction(
        lollipop, 1, values={(("a",), 1): 1, (("b",), 2): 1, (("c",), 2): 2}
    )
    return CoeCertificate(
        "lollipop-stretched",
        code,
        code,
        CylinderFunction(lollipop, 0, const=0),
        l1,
        CylinderFunction(lollipop, 0, const=0),
        CylinderFunction(lollipop, 0, const=1),
    )


@pytest.fixture(scope="session")
def xor_ec(full2):
    # forward map compares neighbors; the claimed inverse (identity)
    # is wrong, so the round-trip checks must fail
    fwd = OneSidedCode(
        full2,
        full2,
        2,
        {
            (("a", "a"), 1): ("a", 1),
            (("b", "b"), 1): ("a", 1),
            (("a", "b"), 1): ("b", 1),
            (("b", "a"), 1): ("b", 1),
        },
        sel_level=1,
        name="neighbor-compare",
    )
    return EcCertificate("neighbor-compare", fwd, identity_code(full2), 0, 0)


# -- fuzzed inputs -------------------------------------------------------


def random_graph(rng, max_states=4, max_symbols=4):
    """A random left-resolving labeled graph with every state essential."""
    n = rng.randint(1, max_states)
    syms = tuple("abcdefgh")[: rng.randint(2, max_symbols)]
    states = tuple(str(i) for i in range(1, n + 1))
    used = set()  # (label, target): left-resolving forbids repeats
    edges = []

    def add(s, t):
        free = [a for a in syms if (a, t) not in used]
        if not free:
            return
        a = rng.choice(free)
        used.add((a, t))
        edges.append((s, a, t))

    for i in range(n):  # a full cycle keeps every state essential
        add(states[i], states[(i + 1) % n])
    for _ in range(rng.randint(0, 2 * n)):
        add(rng.choice(states), rng.choice(states))
    return LabeledGraph("fuzz", states, edges)


def canonical_stable(g, depth):
    """Canonical presentation at the first window that stabilizes."""
    for window in range(depth + 1, depth + 20):
        try:
            return canonical_lgs(g, depth, window)
        except WindowTooSmallError:
            continue
    raise AssertionError("no window stabilized %s" % g.name)


def fuzz_systems(count, seed, depth=4):
    """Deterministic stream of valid systems, alternating constructions."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        g = random_graph(rng)
        if len(out) % 2:
            out.append(canonical_stable(g, depth))
        else:
            out.append(from_labeled_graph(g, depth))
    return out
