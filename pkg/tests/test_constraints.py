import numpy as np
import pytest

from fscap.constraints import (ForbiddenPairSet, graph_period, load_constraint,
                               matrix_period, named_constraint,
                               rll_forbidden_pairs, save_constraint)
from fscap.errors import NotIrreducible, ParseError


def test_rll_1_inf_is_no_11():
    F = rll_forbidden_pairs(1, None)
    assert F.alphabet_size == 2
    assert F.forbidden == frozenset({(1, 1)})
    assert F.is_irreducible()
    assert F.is_primitive()
    assert F.num_free_params() == 1


def test_rll_1_3_shape():
    F = rll_forbidden_pairs(1, 3)
    assert F.alphabet_size == 4
    assert F.is_irreducible()
    assert F.is_primitive()
    adj = F.adjacency()
    # every state has at least one allowed successor and predecessor
    assert np.all(adj.sum(axis=1) >= 1)
    assert np.all(adj.sum(axis=0) >= 1)


def test_rll_2_2_is_periodic():
    F = rll_forbidden_pairs(2, 2)
    assert F.is_irreducible()
    e, classes = F.period()
    assert e == 3
    assert not F.is_primitive()
    assert len(classes) == 3


def test_rll_rejects_bad_params():
    with pytest.raises(ValueError):
        rll_forbidden_pairs(-1)
    with pytest.raises(ValueError):
        rll_forbidden_pairs(3, 2)


def test_free_alphabet():
    F = ForbiddenPairSet(2)
    assert np.array_equal(F.adjacency(), np.ones((2, 2), dtype=int))
    assert F.num_free_params() == 2
    assert F.allowed_pairs() == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_pair_outside_alphabet_rejected():
    with pytest.raises(ValueError):
        ForbiddenPairSet(2, frozenset({(0, 2)}))


def test_two_cycle_period():
    F = ForbiddenPairSet(2, frozenset({(0, 0), (1, 1)}))
    e, classes = F.period()
    assert e == 2
    assert not F.is_primitive()


def test_reducible_graph_detected():
    # row 1 can only go to itself; 1 is absorbing so not strongly connected
    F = ForbiddenPairSet(2, frozenset({(1, 0)}))
    assert not F.is_irreducible()
    with pytest.raises(NotIrreducible):
        graph_period(F.adjacency())


def test_matrix_period_of_cycle():
    P = np.array([[0.0, 1.0], [1.0, 0.0]])
    e, _ = matrix_period(P)
    assert e == 2


def test_save_load_roundtrip(tmp_path):
    F = rll_forbidden_pairs(1, 3)
    path = tmp_path / "constraint.txt"
    save_constraint(F, path)
    G = load_constraint(path)
    assert G == F


def test_load_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("not-a-header\n0 1\n")
    with pytest.raises(ParseError):
        load_constraint(path)


def test_named_constraints():
    assert named_constraint("rll-1-inf") == rll_forbidden_pairs(1, None)
    assert named_constraint("rll-1-3") == rll_forbidden_pairs(1, 3)
    assert named_constraint("free-3") == ForbiddenPairSet(3)
    with pytest.raises(ParseError):
        named_constraint("mystery-7")
