"""Binary-feature characterisations, specificity, coherence and incoherence strategies.

A characterisation is a ``frozenset`` of :class:`Predicate` objects; the
specificity order is set inclusion, so ``a`` is at least as specific as ``b``
exactly when ``a >= b``.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Literal

from aacbr.errors import VocabularyError

Strategy = Literal["keep", "removal", "majority"]
STRATEGIES: tuple[str, ...] = ("keep", "removal", "majority")

Characterisation = frozenset


def format_threshold(t: float) -> str:
    return format(float(t), ".10g")


@dataclass(frozen=True, order=True)
class Predicate:
    """``x[feature] <= threshold``. Identity and order ignore the display name."""

    feature: int
    threshold: float
    name: str = field(default="", compare=False)

    def __str__(self) -> str:
        return f"{self.name or f'x{self.feature}'}_<=_{format_threshold(self.threshold)}"

    def holds(self, value) -> bool:
        return value <= self.threshold


def char_key(c: Characterisation) -> tuple:
    """Sort key: fewer predicates first, then lexicographic over sorted predicates."""
    return (len(c), tuple(sorted(c)))


def char_key_for(vocabulary):
    """:func:`char_key` order, computed through predicate ranks (much cheaper on big casebases)."""
    rank = {p: i for i, p in enumerate(sorted(vocabulary))}
    return lambda c: (len(c), tuple(sorted(rank[p] for p in c)))


def render_characterisation(c: Characterisation) -> str:
    if not c:
        return "{}"
    return "{" + ", ".join(str(p) for p in sorted(c)) + "}"


@dataclass(frozen=True)
class Case:
    characterisation: Characterisation
    outcome: str
    provenance: tuple = ()

    def __str__(self) -> str:
        return f"{render_characterisation(self.characterisation)}: {self.outcome}"


@dataclass(frozen=True)
class Casebase:
    cases: tuple
    vocabulary: tuple
    default_outcome: str
    outcomes: tuple = ()

    def __post_init__(self):
        vocab = frozenset(self.vocabulary)
        if len(vocab) != len(self.vocabulary):
            raise VocabularyError("duplicate predicates in vocabulary")
        for case in self.cases:
            if not case.characterisation <= vocab:
                raise VocabularyError(f"case {case} uses predicates outside the vocabulary")
        labels = [self.default_outcome] + sorted({c.outcome for c in self.cases} - {self.default_outcome})
        known = list(self.outcomes) or labels
        if known[0] != self.default_outcome:
            known = [self.default_outcome] + [o for o in known if o != self.default_outcome]
        if not set(labels) <= set(known) or len(known) > 2:
            raise VocabularyError(f"outcomes {labels} are not a binary label set with default {self.default_outcome!r}")
        object.__setattr__(self, "outcomes", tuple(known))

    def __len__(self) -> int:
        return len(self.cases)

    @property
    def non_default_outcome(self) -> str | None:
        return self.outcomes[1] if len(self.outcomes) > 1 else None


def _check_vocabulary(vocabulary, *chars):
    if vocabulary is None:
        return
    vocab = frozenset(vocabulary)
    for c in chars:
        if not c <= vocab:
            raise VocabularyError(f"{render_characterisation(c)} is not drawn from the vocabulary")


def more_specific_eq(a: Characterisation, b: Characterisation, vocabulary=None) -> bool:
    _check_vocabulary(vocabulary, a, b)
    return a >= b


def irrelevant(new: Characterisation, past: Characterisation, vocabulary=None) -> bool:
    """A past case is irrelevant to a new one unless the new case is at least as specific."""
    _check_vocabulary(vocabulary, new, past)
    return not past <= new


def coherence_violations(cb: Casebase) -> list[tuple[Case, Case]]:
    by_char = defaultdict(list)
    for case in cb.cases:
        by_char[case.characterisation].append(case)
    pairs = []
    for char in sorted(by_char, key=char_key):
        for x, y in combinations(by_char[char], 2):
            if x.outcome != y.outcome:
                pairs.append((x, y))
    return pairs


def _merge_duplicates(cases) -> dict:
    merged = {}
    for case in cases:
        key = (case.characterisation, case.outcome)
        merged[key] = merged.get(key, ()) + tuple(case.provenance)
    return merged


def apply_strategy(cb: Casebase, strategy: Strategy) -> Casebase:
    """Resolve incoherence and normalise the casebase.

    Every strategy merges exact duplicates and drops cases with the empty
    characterisation and the default outcome, which the default argument
    already represents. ``majority`` ties go to the default outcome.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    merged = _merge_duplicates(cb.cases)
    outcomes_by_char = defaultdict(list)
    for char, outcome in merged:
        outcomes_by_char[char].append(outcome)

    result = []
    for char, outcomes in outcomes_by_char.items():
        if strategy == "keep" or len(outcomes) == 1:
            result.extend(Case(char, o, merged[char, o]) for o in outcomes)
        elif strategy == "majority":
            counts = Counter({o: len(merged[char, o]) for o in outcomes})
            top = max(counts.values())
            winners = [o for o in outcomes if counts[o] == top]
            winner = cb.default_outcome if cb.default_outcome in winners else min(winners)
            provenance = tuple(p for o in outcomes for p in merged[char, o])
            result.append(Case(char, winner, provenance))
        # removal: characterisations with conflicting outcomes are dropped entirely

    result = [c for c in result if c.characterisation or c.outcome != cb.default_outcome]
    key = char_key_for(cb.vocabulary)
    result.sort(key=lambda c: (key(c.characterisation), c.outcome))
    return Casebase(tuple(result), cb.vocabulary, cb.default_outcome, cb.outcomes)


def vocabulary_to_json(vocabulary) -> list:
    return [{"feature": p.feature, "name": p.name, "threshold": p.threshold} for p in vocabulary]


def vocabulary_from_json(data) -> tuple:
    return tuple(Predicate(int(d["feature"]), float(d["threshold"]), d.get("name", "")) for d in data)


def casebase_to_dict(cb: Casebase) -> dict:
    index = {p: i for i, p in enumerate(cb.vocabulary)}
    return {
        "vocabulary": vocabulary_to_json(cb.vocabulary),
        "default_outcome": cb.default_outcome,
        "outcomes": list(cb.outcomes),
        "cases": [
            {
                "predicates": sorted(index[p] for p in case.characterisation),
                "outcome": case.outcome,
                "provenance": list(case.provenance),
            }
            for case in cb.cases
        ],
    }


def casebase_from_dict(data: dict) -> Casebase:
    vocabulary = vocabulary_from_json(data["vocabulary"])
    try:
        cases = tuple(
            Case(frozenset(vocabulary[i] for i in c["predicates"]), c["outcome"], tuple(c.get("provenance", ())))
            for c in data["cases"]
        )
    except IndexError as exc:
        raise VocabularyError("case refers to a predicate index outside the vocabulary") from exc
    return Casebase(cases, vocabulary, data["default_outcome"], tuple(data.get("outcomes", ())))


def dumps(cb: Casebase) -> str:
    return json.dumps(casebase_to_dict(cb), indent=2, sort_keys=True) + "\n"


def loads(text: str) -> Casebase:
    return casebase_from_dict(json.loads(text))
