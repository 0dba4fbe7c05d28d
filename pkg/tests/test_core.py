"""Axioms, constructions, and text round trips for leveled systems."""

import pytest
from hypothesis import given, settings, strategies as st

from lgs import (
    DepthBudgetError,
    LabeledGraph,
    LambdaGraphSystem,
    canonical_lgs,
    from_labeled_graph,
    full_shift,
    transition_matrices,
    truncate,
)
from lgs.io import FormatError, parse_graph, parse_lgs, serialize_graph, serialize_lgs

import oracles
from conftest import (
    EVEN_GRAPH,
    GM_GRAPH,
    canonical_stable,
    fuzz_systems,
    random_graph,
    same_lgs,
)


def rebuild(lgs, **changes):
    parts = dict(
        name=lgs.name,
        alphabet=lgs.alphabet,
        level_sizes=lgs.level_sizes,
        edges=[list(e) for e in lgs.edges],
        iota=[list(c) for c in lgs.iota],
    )
    parts.update(changes)
    return LambdaGraphSystem(**parts)


# -- validation ----------------------------------------------------------


def test_examples_validate(full2, gm, even, even_canonical, block_deep, lollipop):
    for sys in (full2, gm, even, even_canonical, block_deep, lollipop):
        rep = sys.validate()
        assert rep.ok, rep.violations


def test_missing_edge_breaks_local_property(full2):
    edges = [list(e) for e in full2.edges]
    edges[2] = [e for e in edges[2] if e[1] != "b"]
    rep = rebuild(full2, edges=edges).validate()
    assert not rep.ok
    hits = rep.by_rule("local-property")
    assert hits and any(v.location.startswith("(l=2") for v in hits)


def test_collapsed_iota_breaks_surjectivity(gm):
    iota = [list(c) for c in gm.iota]
    iota[0] = [1, 1]
    rep = rebuild(gm, iota=iota).validate()
    assert not rep.ok
    hits = rep.by_rule("iota-surjective")
    assert hits and hits[0].location == "l=0"


def test_deleted_out_edges_break_successor(even):
    edges = [list(e) for e in even.edges]
    edges[3] = [e for e in edges[3] if e[0] != 2]
    rep = rebuild(even, edges=edges).validate()
    assert not rep.ok
    hits = rep.by_rule("successor")
    assert hits and hits[0].detail == "v_2^3 has no outgoing edge"


def test_relabeled_edge_breaks_terminal_consistency(even):
    # the level-2 copy of edge 2-a->1 becomes a b-edge: the label sets
    # entering v_1^3 and its projection v_1^2 now disagree
    edges = [list(e) for e in even.edges]
    edges[2] = [(1, "b", 1), (1, "a", 2), (2, "b", 1)]
    rep = rebuild(even, edges=edges).validate()
    assert not rep.ok
    assert rep.by_rule("terminal-consistency")


def test_fuzzed_systems_validate():
    for sys in fuzz_systems(40, seed=101):
        assert sys.validate().ok


# -- constructor guards ---------------------------------------------------


def test_constructor_rejects_garbage(gm):
    with pytest.raises(ValueError):
        rebuild(gm, alphabet=("a", "a", "g"))
    with pytest.raises(ValueError):
        rebuild(gm, edges=[[(1, "z", 1)]] + [list(e) for e in gm.edges[1:]])
    with pytest.raises(ValueError):
        rebuild(gm, edges=[[(1, "a", 9)]] + [list(e) for e in gm.edges[1:]])
    dup = [list(e) for e in gm.edges]
    dup[0] = dup[0] + [dup[0][0]]
    with pytest.raises(ValueError):
        rebuild(gm, edges=dup)
    with pytest.raises(ValueError):
        rebuild(gm, iota=[[1]] + [list(c) for c in gm.iota[1:]])
    with pytest.raises(ValueError):
        LambdaGraphSystem("tiny", ["a"], [1], [], [])


def test_labeled_graph_guards():
    with pytest.raises(ValueError):
        LabeledGraph("g", ["1", "1"], [])
    with pytest.raises(ValueError):
        LabeledGraph("g", ["1"], [("1", "a", "2")])
    with pytest.raises(ValueError):
        LabeledGraph("g", ["1"], [("1", "a", "1"), ("1", "a", "1")])
    g = LabeledGraph("g", ["q", "p"], [("q", "b", "p"), ("p", "a", "q")])
    assert g.alphabet == ("a", "b")
    assert g.state_index("p") == 2


def test_from_labeled_graph_needs_essential_states():
    sink = LabeledGraph("sink", ["1", "2"], [("1", "a", "1"), ("1", "b", "2")])
    with pytest.raises(ValueError, match="no outgoing"):
        from_labeled_graph(sink, 3)
    source = LabeledGraph("source", ["1", "2"], [("1", "a", "2"), ("2", "b", "2")])
    with pytest.raises(ValueError, match="no incoming"):
        from_labeled_graph(source, 3)


def test_from_labeled_graph_shape(gm):
    assert gm.level_sizes == (2,) * 6
    assert all(gm.iota[l] == (1, 2) for l in range(5))
    assert gm.edges[0] == ((1, "a", 1), (1, "b", 2), (2, "g", 1))


# -- navigation ----------------------------------------------------------


def test_end_vertices_and_admissibility(gm):
    assert gm.end_vertices(("a", "b"), 2) == frozenset({2})
    assert gm.end_vertices(("b", "g"), 2) == frozenset({1})
    assert gm.end_vertices(("b", "b"), 2) == frozenset()
    assert gm.admissible(("g", "a"), 3, 1)
    assert not gm.admissible(("g", "g"), 2, 1)
    with pytest.raises(ValueError):
        gm.end_vertices(("a", "b"), 1)


def test_backward_path_is_unique_on_left_resolving(gm):
    assert gm.backward_path(("a", "b"), 2, 2) == (1, 1, 2)
    assert gm.backward_path(("b", "b"), 2, 2) is None
    braid = from_labeled_graph(
        LabeledGraph("braid", ["1", "2"], [("1", "a", "1"), ("2", "a", "1"), ("1", "b", "2"), ("2", "b", "2")]),
        3,
    )
    with pytest.raises(ValueError, match="left-resolving"):
        braid.backward_path(("a",), 1, 1)


def test_left_resolving_flag(gm, even):
    assert gm.is_left_resolving() == (True, None)
    assert even.is_left_resolving()[0]
    braid = from_labeled_graph(
        LabeledGraph("braid", ["1", "2"], [("1", "a", "1"), ("2", "a", "1"), ("1", "b", "2"), ("2", "b", "2")]),
        2,
    )
    flag, witness = braid.is_left_resolving()
    assert not flag
    e1, e2 = witness
    assert (e1.target, e1.label) == (e2.target, e2.label)
    assert e1.source != e2.source
    with pytest.raises(ValueError, match="left-resolving"):
        braid.require_left_resolving("test")


def test_projections_compose(even_canonical):
    s = even_canonical
    for l in range(1, s.depth + 1):
        for j in s.vertex_range(l):
            step = j
            for lvl in range(l, 0, -1):
                step = s.iota_of(lvl, step)
            assert s.project(l, j, 0) == step
    for l in range(s.depth):
        for i in s.vertex_range(l):
            for j in s.iota_preimages(l, i):
                assert s.iota_of(l + 1, j) == i


def test_label_paths_and_budget(full2):
    paths = list(full2.label_paths(3))
    assert len(paths) == 8
    labels, verts = paths[0]
    assert labels == ("a", "a", "a") and verts == (1, 1, 1, 1)
    with pytest.raises(DepthBudgetError) as err:
        list(full2.label_paths(6))
    assert err.value.needed_level == 6


def test_truncate_is_a_prefix(full2_deep, full2):
    cut = truncate(full2_deep, 5)
    assert serialize_lgs(cut) == serialize_lgs(full2)
    with pytest.raises(ValueError):
        truncate(full2, 0)
    with pytest.raises(ValueError):
        truncate(full2, 9)


def test_transition_matrices_match_edges(gm):
    A, I = transition_matrices(gm, 1)
    assert A.shape == (2, 3, 2) and I.shape == (2, 2)
    assert (I == [[1, 0], [0, 1]]).all()
    for (i, a, j) in gm.edges[1]:
        assert A[i - 1, gm.sym_id[a], j - 1] == 1
    assert int(A.sum()) == len(gm.edges[1])
    with pytest.raises(DepthBudgetError):
        transition_matrices(gm, 5)


# -- canonical construction ----------------------------------------------


def test_canonical_even_language_matches_walk_oracle(even_canonical):
    from lgs import words

    for k in range(6):
        assert list(words(even_canonical, k)) == oracles.graph_words(EVEN_GRAPH, k)


def test_canonical_golden_mean_language(gm):
    canon = canonical_lgs(GM_GRAPH, 5, 6)
    assert canon.validate().ok
    assert canon.is_left_resolving()[0]
    from lgs import words

    for k in range(6):
        assert words(canon, k) == words(gm, k)


def test_canonical_even_level_sizes_match_class_counts():
    canon = canonical_lgs(EVEN_GRAPH, 3, 8)
    expect = tuple(oracles.past_class_count(EVEN_GRAPH, l, 8) for l in range(4))
    assert canon.level_sizes == expect
    # counts already stable: a longer future gives the same classifier
    assert expect == tuple(oracles.past_class_count(EVEN_GRAPH, l, 10) for l in range(4))


def test_canonical_window_guard():
    with pytest.raises(ValueError, match="window"):
        canonical_lgs(GM_GRAPH, 5, 3)


def test_unstable_window_is_rejected():
    from lgs import WindowTooSmallError

    # at window 4 the past classes of this graph have not converged;
    # the construction must refuse rather than emit a broken system
    tangle = LabeledGraph(
        "tangle",
        ["1", "2", "3", "4"],
        [
            ("1", "a", "2"),
            ("1", "c", "3"),
            ("2", "a", "3"),
            ("2", "b", "3"),
            ("2", "c", "1"),
            ("2", "c", "2"),
            ("3", "b", "4"),
            ("3", "c", "4"),
            ("4", "b", "1"),
        ],
    )
    with pytest.raises(WindowTooSmallError):
        canonical_lgs(tangle, 3, 4)
    sys = canonical_lgs(tangle, 3, 6)
    assert sys.validate().ok
    assert sys.is_left_resolving()[0]


# -- text round trips -----------------------------------------------------


def test_system_round_trip(gm, even_canonical):
    for sys in (gm, even_canonical):
        assert same_lgs(parse_lgs(serialize_lgs(sys)), sys)


def test_graph_round_trip():
    g = parse_graph(serialize_graph(EVEN_GRAPH))
    assert g.states == EVEN_GRAPH.states and g.edges == EVEN_GRAPH.edges


def test_parse_errors_carry_positions():
    with pytest.raises(FormatError) as err:
        parse_lgs("lgs x\nalphabet a\ndepth 1\nvertices 0 1\nvertices 1 1\nedge 0 1 a\nend\n")
    assert err.value.line == 6
    with pytest.raises(FormatError, match="expected a 'lgs' document"):
        parse_lgs("graph x\nend\n")
    with pytest.raises(FormatError, match="missing end"):
        parse_lgs("lgs x\nalphabet a\ndepth 1\nvertices 0 1\nvertices 1 1\n")
    with pytest.raises(FormatError) as err:
        parse_graph("graph x\nstate 1\nstate 1\nend\n")
    assert "duplicate" in str(err.value)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_fuzzed_round_trip(seed):
    import random

    g = random_graph(random.Random(seed))
    sys = from_labeled_graph(g, 3)
    assert same_lgs(parse_lgs(serialize_lgs(sys)), sys)
    assert sys.validate().ok


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_fuzzed_canonical_language_matches_graph_walks(seed):
    import random

    g = random_graph(random.Random(seed))
    sys = canonical_stable(g, 3)
    assert sys.validate().ok
    assert sys.is_left_resolving()[0]
    from lgs import words

    for k in range(4):
        assert list(words(sys, k)) == oracles.graph_words(g, k)
