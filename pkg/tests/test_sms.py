"""Matrix view: extraction, the intertwining identity, and rebuilds."""

import numpy as np
import pytest

from lgs import (
    LambdaGraphSystem,
    SymbolicMatrixSystem,
    from_lgs,
    to_lgs,
    transition_matrices,
    truncate,
    verify_compatibility,
)
from lgs.io import parse_sms, serialize_sms

import oracles
from conftest import fuzz_systems, same_lgs


def swap_iota(s, l):
    """Copy of a matrix system with the columns of ``I[l]`` swapped."""
    I = [a.copy() for a in s.I]
    I[l] = I[l][:, ::-1]
    return SymbolicMatrixSystem(s.name, s.alphabet, s.level_sizes, list(s.M), I)


def test_extraction_frozen(full2, gm, even):
    s = from_lgs(full2)
    assert all(s.M[l] == {(1, 1): ("a", "b")} for l in range(5))
    assert all((s.I[l] == [[1]]).all() for l in range(5))
    s = from_lgs(gm)
    assert all(
        s.M[l] == {(1, 1): ("a",), (1, 2): ("b",), (2, 1): ("g",)} for l in range(5)
    )
    assert all((s.I[l] == np.eye(2)).all() for l in range(5))
    s = from_lgs(even)
    assert s.M[0] == {(1, 1): ("b",), (1, 2): ("a",), (2, 1): ("a",)}
    assert s.entry(3, 2, 2) == ()


def test_examples_are_compatible(full2, gm, even, even_canonical, block_deep):
    for sys in (full2, gm, even, even_canonical, block_deep):
        s = from_lgs(sys)
        rep = verify_compatibility(s)
        assert rep.ok and rep.first is None
        assert len(rep.levels) == s.depth - 1
        assert oracles.product_mismatches(s) == []


def test_fuzzed_systems_are_compatible():
    for sys in fuzz_systems(30, seed=5):
        s = from_lgs(sys)
        rep = verify_compatibility(s)
        assert rep.ok
        assert oracles.product_mismatches(s) == []


def test_swapped_projection_is_located(gm):
    bad = swap_iota(from_lgs(gm), 2)
    rep = verify_compatibility(bad)
    assert rep.levels == (True, False, False, True)
    assert str(rep.first) == "level 1 entry (1,1): b vs a"
    # the independent multiset-product oracle sees the same cells
    assert {(m.level, m.row, m.col) for m in rep.mismatches} == set(
        oracles.product_mismatches(bad)
    )
    with pytest.raises(ValueError, match="not compatible at level 1"):
        to_lgs(bad)


def test_matrix_and_graph_checks_agree_on_corruption(gm):
    # swapping iota in the graph breaks the local property; extracting
    # matrices from the broken graph must break the identity too
    iota = [list(c) for c in gm.iota]
    iota[2] = [2, 1]
    broken = LambdaGraphSystem(gm.name, gm.alphabet, gm.level_sizes, gm.edges, iota)
    assert not broken.validate().ok
    assert broken.validate().by_rule("local-property")
    assert not verify_compatibility(from_lgs(broken)).ok


def test_rebuild_round_trip(gm, even_canonical):
    for sys in (gm, even_canonical):
        s = from_lgs(sys)
        assert same_lgs(to_lgs(s), sys)
        assert from_lgs(to_lgs(s)) == s


def test_rebuild_round_trip_on_fuzz():
    for sys in fuzz_systems(16, seed=23):
        assert same_lgs(to_lgs(from_lgs(sys)), sys)


def test_rebuild_guards(full2):
    shallow = from_lgs(truncate(full2, 1))
    broken = swap_iota(shallow, 0)  # 1x1 flip is a no-op; zero it instead
    I = [np.zeros((1, 1), dtype=np.int8)]
    broken = SymbolicMatrixSystem(shallow.name, shallow.alphabet, shallow.level_sizes, list(shallow.M), I)
    with pytest.raises(ValueError, match="not a projection"):
        to_lgs(broken)
    rep = SymbolicMatrixSystem(
        "dup", ("a",), (1, 1), [{(1, 1): ("a", "a")}], [np.eye(1, dtype=np.int8)]
    )
    with pytest.raises(ValueError, match="repeats a symbol"):
        rep.to_lgs()
    holes = SymbolicMatrixSystem(
        "holes", ("a",), (2, 2), [{(1, 1): ("a",), (2, 1): ("a",)}], [np.eye(2, dtype=np.int8)]
    )
    with pytest.raises(ValueError, match="column 2 .* empty"):
        holes.to_lgs()


def test_scalar_specialization(full2, gm, even, even_canonical):
    # forgetting labels symbol by symbol turns M.I = I.M into integer
    # matrix identities over the 0/1 transition data
    for sys in (full2, gm, even, even_canonical):
        mats = [transition_matrices(sys, l) for l in range(sys.depth)]
        for l in range(sys.depth - 1):
            A0, I0 = mats[l]
            A1, I1 = mats[l + 1]
            for s in range(len(sys.alphabet)):
                assert (A0[:, s, :] @ I1 == I0 @ A1[:, s, :]).all()


def test_sms_text_round_trip(gm, even_canonical):
    for sys in (gm, even_canonical):
        s = from_lgs(sys)
        back = parse_sms(serialize_sms(s))
        assert back == s and back.name == s.name
