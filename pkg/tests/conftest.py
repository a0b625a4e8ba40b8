import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aacbr.casebase import Case, Casebase, Predicate
from aacbr.dtree import DecisionTree, Leaf, Split

# Toy rows in the order alpha, beta, gamma, epsilon, eta.
TOY_X = np.array([[20, 2], [30, 1], [35, 7], [19, 1], [19, 10]], dtype=float)
TOY_Y = ["+", "-", "+", "-", "+"]
TOY_NAMES = ("age", "prior_count")
ALPHA, BETA, GAMMA, EPSILON, ETA = range(5)

AGE21 = Predicate(0, 21.0, "age")
PRIOR3 = Predicate(1, 3.0, "prior_count")


def toy_tree() -> DecisionTree:
    """Hand-built tree for the toy rows: age <= 21, then prior_count <= 3 for the older rows."""
    return DecisionTree(
        Split(0, 21.0, Leaf("+", (2, 1)), Split(1, 3.0, Leaf("-", (0, 1)), Leaf("+", (1, 0)), (1, 1)), (3, 2)),
        ("+", "-"),
        TOY_NAMES,
        "+",
    )


@pytest.fixture
def toy_tree_fixture():
    return toy_tree()


# Welfare-like predicates for a casebase with the attack structure of the
# target dispute tree: default <- c1 <- c2 <- {c3a, c3b}, and the new case
# finds c3a and c3b irrelevant.
CAP = Predicate(4, 3005.0, "capital_resources")
ABS = Predicate(3, 0.5, "is_absent")
AGE = Predicate(0, 59.5, "age")
SPOUSE = Predicate(2, 0.5, "is_spouse")
PC5 = Predicate(1, 0.5, "paid_contribution5")
WELFARE_VOCAB = tuple(sorted([CAP, ABS, AGE, SPOUSE, PC5]))


def dispute_casebase() -> Casebase:
    cases = (
        Case(frozenset({CAP}), "-", ("c1",)),
        Case(frozenset({CAP, ABS}), "+", ("c2",)),
        Case(frozenset({CAP, AGE, ABS}), "-", ("c3a",)),
        Case(frozenset({CAP, SPOUSE, ABS}), "-", ("c3b",)),
    )
    return Casebase(cases, WELFARE_VOCAB, "+", ("+", "-"))


DISPUTE_NEW = frozenset({CAP, ABS, PC5})


@pytest.fixture
def dispute_cb():
    return dispute_casebase()
