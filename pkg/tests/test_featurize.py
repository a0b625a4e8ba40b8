import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aacbr.casebase import Predicate
from aacbr.dtree import DecisionTree, Leaf, Split, TreeParams, grow, leaf_path
from aacbr.errors import ArityError
from aacbr.featurize import (
    binarise,
    binarise_dataset,
    binarise_matrix,
    extract_vocabulary,
    rows_to_characterisations,
)
from conftest import AGE21, ALPHA, EPSILON, ETA, TOY_X, TOY_Y, GAMMA, PRIOR3, toy_tree


def test_vocabulary_of_assumed_tree():
    assert extract_vocabulary(toy_tree()) == (AGE21, PRIOR3)


class TestToyCharacterisations:
    def test_eta(self):
        assert binarise(TOY_X[ETA], (AGE21, PRIOR3)) == {AGE21}

    def test_gamma_is_empty(self):
        assert binarise(TOY_X[GAMMA], (AGE21, PRIOR3)) == frozenset()

    def test_alpha_and_epsilon_coincide(self):
        chars = rows_to_characterisations(TOY_X, (AGE21, PRIOR3))
        assert chars[ALPHA] == chars[EPSILON] == {AGE21, PRIOR3}

    def test_casebase_keeps_every_row(self):
        cb = binarise_dataset(TOY_X, TOY_Y, toy_tree())
        assert len(cb) == 5
        assert [c.provenance for c in cb.cases] == [(i,) for i in range(5)]
        assert cb.outcomes == ("+", "-")


def test_repeated_split_collapses():
    leaf = Leaf("a", (1, 0))
    tree = DecisionTree(Split(0, 1.0, Split(0, 1.0, leaf, leaf, (1, 0)), leaf, (1, 0)), ("a", "b"), ("x",), "a")
    assert extract_vocabulary(tree) == (Predicate(0, 1.0),)


def test_threshold_boundary_is_inclusive():
    p = Predicate(0, 2.5)
    assert binarise([2.5], (p,)) == {p}
    assert binarise([2.5000001], (p,)) == frozenset()


def test_characterisation_can_include_predicates_off_the_path():
    # the row goes right at the root, yet satisfies the predicate of the left subtree
    left = Split(1, 5.0, Leaf("a", (1, 0)), Leaf("b", (0, 1)), (1, 1))
    tree = DecisionTree(Split(0, 0.5, left, Leaf("b", (0, 1)), (1, 2)), ("a", "b"), ("x", "y"), "a")
    row = [1.0, 0.0]
    on_path = {(n.feature, n.threshold) for n in leaf_path(tree, row) if isinstance(n, Split)}
    char = binarise(row, extract_vocabulary(tree))
    assert {(p.feature, p.threshold) for p in char} == {(1, 5.0)}
    assert on_path == {(0, 0.5)}


def test_one_leaf_many_characterisations():
    tree = toy_tree()
    vocab = extract_vocabulary(tree)
    # both rows land in the age <= 21 leaf
    assert leaf_path(tree, [20, 2])[-1] is leaf_path(tree, [20, 9])[-1]
    assert binarise([20, 2], vocab) != binarise([20, 9], vocab)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=2), st.floats(0, 5), st.integers(0, 1))
def test_monotone_in_each_feature(row, bump, f):
    vocab = (AGE21, PRIOR3, Predicate(0, -3.0), Predicate(1, 0.0))
    higher = list(row)
    higher[f] += bump
    assert binarise(higher, vocab) <= binarise(row, vocab)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matrix_agrees_with_rows(seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 5, size=(30, 3)).astype(float)
    y = rng.choice(["a", "b"], size=30)
    vocab = extract_vocabulary(grow(X, y, TreeParams(4, 8)))
    bits = binarise_matrix(X, vocab)
    for r, row in zip(bits, X):
        assert {p for p, b in zip(vocab, r) if b} == binarise(row, vocab)


def test_short_row():
    with pytest.raises(ArityError):
        binarise([1.0], (AGE21, PRIOR3))
    with pytest.raises(ArityError):
        binarise_matrix(np.zeros((2, 1)), (AGE21, PRIOR3))
