"""Split rules of a trained tree as binary features.

Every split node anywhere in the tree contributes one predicate, and a row is
characterised by all predicates it satisfies, not only those on its own
decision path.
"""

from __future__ import annotations

import numpy as np

from aacbr.casebase import Case, Casebase, Predicate
from aacbr.dtree import DecisionTree, Split, iter_nodes
from aacbr.errors import ArityError


def extract_vocabulary(tree: DecisionTree) -> tuple[Predicate, ...]:
    found = {
        Predicate(n.feature, n.threshold, tree.feature_name(n.feature))
        for n in iter_nodes(tree.root)
        if isinstance(n, Split)
    }
    return tuple(sorted(found))


def _required_arity(vocabulary) -> int:
    return max((p.feature for p in vocabulary), default=-1) + 1


def binarise(row, vocabulary) -> frozenset:
    if len(row) < _required_arity(vocabulary):
        raise ArityError(f"row has {len(row)} values but the vocabulary uses feature {_required_arity(vocabulary) - 1}")
    return frozenset(p for p in vocabulary if row[p.feature] <= p.threshold)


def binarise_matrix(X, vocabulary) -> np.ndarray:
    """Boolean matrix with one column per vocabulary predicate."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ArityError(f"expected a 2-d array, got shape {X.shape}")
    if X.shape[1] < _required_arity(vocabulary):
        raise ArityError(f"rows have {X.shape[1]} values but the vocabulary needs {_required_arity(vocabulary)}")
    if not vocabulary:
        return np.zeros((len(X), 0), dtype=bool)
    features = np.array([p.feature for p in vocabulary])
    thresholds = np.array([p.threshold for p in vocabulary])
    return X[:, features] <= thresholds


def rows_to_characterisations(X, vocabulary) -> list[frozenset]:
    bits = binarise_matrix(X, vocabulary)
    vocab = list(vocabulary)
    return [frozenset(vocab[j] for j in np.flatnonzero(r)) for r in bits]


def binarise_dataset(X, y, tree: DecisionTree, default_outcome: str | None = None, row_ids=None) -> Casebase:
    """One case per row, characterised by the tree's split predicates.

    No incoherence handling happens here; see :func:`aacbr.casebase.apply_strategy`.
    """
    vocabulary = extract_vocabulary(tree)
    y = [str(v) for v in y]
    X = np.asarray(X, dtype=float).reshape(len(y), -1) if len(y) else np.zeros((0, tree.n_features))
    if len(X) != len(y):
        raise ArityError(f"{len(X)} rows but {len(y)} labels")
    ids = list(range(len(y))) if row_ids is None else list(row_ids)
    chars = rows_to_characterisations(X, vocabulary)
    cases = tuple(Case(c, label, (rid,)) for c, label, rid in zip(chars, y, ids))
    default = default_outcome or tree.default_outcome
    outcomes = (default,) + tuple(c for c in tree.classes if c != default)
    return Casebase(cases, vocabulary, default, outcomes)
