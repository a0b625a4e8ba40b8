import pytest
from hypothesis import given
from hypothesis import strategies as st

from aacbr.casebase import (
    Case,
    Casebase,
    Predicate,
    apply_strategy,
    casebase_from_dict,
    casebase_to_dict,
    coherence_violations,
    dumps,
    irrelevant,
    loads,
    more_specific_eq,
)
from aacbr.errors import VocabularyError
from conftest import AGE21, PRIOR3, dispute_casebase

P = [Predicate(i, 0.5, f"p{i}") for i in range(5)]
chars = st.frozensets(st.sampled_from(P), max_size=5)


class TestPartialOrder:
    @given(chars)
    def test_reflexive(self, a):
        assert more_specific_eq(a, a)

    @given(chars, chars)
    def test_antisymmetric(self, a, b):
        if more_specific_eq(a, b) and more_specific_eq(b, a):
            assert a == b

    @given(chars, chars, chars)
    def test_transitive(self, a, b, c):
        if more_specific_eq(a, b) and more_specific_eq(b, c):
            assert more_specific_eq(a, c)

    def test_superset_is_more_specific(self):
        assert more_specific_eq(frozenset({AGE21, PRIOR3}), frozenset({AGE21}))
        assert not more_specific_eq(frozenset({AGE21}), frozenset({PRIOR3}))

    def test_outside_vocabulary(self):
        with pytest.raises(VocabularyError):
            more_specific_eq(frozenset({P[0]}), frozenset(), vocabulary=(AGE21,))


class TestIrrelevant:
    def test_past_with_extra_predicate(self):
        assert irrelevant(frozenset({AGE21}), frozenset({AGE21, PRIOR3}))

    def test_past_subset(self):
        assert not irrelevant(frozenset({AGE21, PRIOR3}), frozenset({AGE21}))

    def test_empty_past_is_always_relevant(self):
        assert not irrelevant(frozenset(), frozenset())

    @given(chars, chars)
    def test_complement_of_subset(self, new, past):
        assert irrelevant(new, past) == (not past <= new)


def _cb(*cases, default="+"):
    return Casebase(tuple(Case(frozenset(c), o, (i,)) for i, (c, o) in enumerate(cases)), tuple(P), default)


class TestCoherence:
    def test_three_cases_two_pairs(self):
        cb = _cb(({P[0]}, "+"), ({P[0]}, "+"), ({P[0]}, "-"))
        assert len(coherence_violations(cb)) == 2

    def test_coherent(self):
        assert coherence_violations(dispute_casebase()) == []


class TestStrategies:
    def conflicted(self):
        return _cb(({P[0]}, "+"), ({P[0]}, "-"), ({P[0]}, "-"), ({P[1]}, "-"), ((), "+"))

    def test_keep_merges_duplicates_only(self):
        cb = apply_strategy(self.conflicted(), "keep")
        assert [(set(c.characterisation), c.outcome, c.provenance) for c in cb.cases] == [
            ({P[0]}, "+", (0,)),
            ({P[0]}, "-", (1, 2)),
            ({P[1]}, "-", (3,)),
        ]
        assert len(coherence_violations(cb)) == 1

    def test_removal_drops_conflicts(self):
        cb = apply_strategy(self.conflicted(), "removal")
        assert [(set(c.characterisation), c.outcome) for c in cb.cases] == [({P[1]}, "-")]

    def test_majority_counts_rows(self):
        cb = apply_strategy(self.conflicted(), "majority")
        assert [(set(c.characterisation), c.outcome) for c in cb.cases] == [({P[0]}, "-"), ({P[1]}, "-")]
        assert cb.cases[0].provenance == (0, 1, 2)

    def test_majority_tie_goes_to_default(self):
        cb = apply_strategy(_cb(({P[0]}, "+"), ({P[0]}, "-"), default="-"), "majority")
        assert [c.outcome for c in cb.cases] == ["-"]

    def test_empty_default_case_dropped(self):
        cb = apply_strategy(_cb(((), "+"), ((), "-")), "keep")
        assert [(c.characterisation, c.outcome) for c in cb.cases] == [(frozenset(), "-")]

    @pytest.mark.parametrize("strategy", ["removal", "majority"])
    def test_coherent_after(self, strategy):
        assert coherence_violations(apply_strategy(self.conflicted(), strategy)) == []

    def test_unknown(self):
        with pytest.raises(ValueError):
            apply_strategy(self.conflicted(), "vote")


class TestValidation:
    def test_case_outside_vocabulary(self):
        with pytest.raises(VocabularyError):
            Casebase((Case(frozenset({AGE21}), "+"),), tuple(P), "+")

    def test_duplicate_vocabulary(self):
        with pytest.raises(VocabularyError):
            Casebase((), (P[0], P[0]), "+")

    def test_three_labels(self):
        with pytest.raises(VocabularyError):
            _cb(({P[0]}, "a"), ({P[1]}, "b"), default="c")

    def test_default_listed_first(self):
        assert _cb(({P[0]}, "a"), default="b").outcomes == ("b", "a")


class TestSerialisation:
    def test_round_trip(self):
        cb = dispute_casebase()
        again = loads(dumps(cb))
        assert again == cb
        assert dumps(again) == dumps(cb)

    def test_names_survive(self):
        again = loads(dumps(dispute_casebase()))
        assert {p.name for p in again.vocabulary} == {p.name for p in dispute_casebase().vocabulary}

    def test_bad_index(self):
        data = casebase_to_dict(dispute_casebase())
        data["cases"][0]["predicates"] = [99]
        with pytest.raises(VocabularyError):
            casebase_from_dict(data)
