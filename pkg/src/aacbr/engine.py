"""Mining argumentation frameworks from casebases and classifying new cases.

Argument identifiers inside mined frameworks are integers: ``DEFAULT_ARG``
(0) for the default argument, ``i + 1`` for the i-th case of the casebase and
``NEW_ARG`` (-1) for the new case.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Literal

import numpy as np

from aacbr.af import ArgumentationFramework, GroundedResult, grounded
from aacbr.casebase import (
    Case,
    Casebase,
    Strategy,
    apply_strategy,
    casebase_from_dict,
    casebase_to_dict,
    char_key_for,
    render_characterisation,
)
from aacbr.dtree import DecisionTree, TreeParams, grow, majority_label, tree_from_dict, tree_to_dict
from aacbr.errors import VocabularyError
from aacbr.featurize import binarise, binarise_dataset, binarise_matrix, extract_vocabulary

DEFAULT_ARG = 0
NEW_ARG = -1

Variant = Literal["regular", "cumulative"]
OrderPolicy = Literal["specificity", "given"]
MODEL_FORMAT = "aacbr-model/1"


def case_arg(i: int) -> int:
    return i + 1


def char_matrix(chars, vocabulary) -> np.ndarray:
    index = {p: j for j, p in enumerate(vocabulary)}
    m = np.zeros((len(chars), len(vocabulary)), dtype=bool)
    for i, c in enumerate(chars):
        try:
            m[i, [index[p] for p in c]] = True
        except KeyError as exc:
            raise VocabularyError(f"predicate {exc.args[0]} is not in the vocabulary") from None
    return m


def _attack_matrix(C: np.ndarray, out: np.ndarray) -> np.ndarray:
    """attacks[a, b] for arguments whose characterisations are the rows of ``C``.

    Row 0 must be the default argument (empty characterisation); it attacks
    nothing since it is not a past case.
    """
    Cf = C.astype(np.float32)
    missing = Cf @ (~C).astype(np.float32).T  # missing[j, i] = |C_j minus C_i|
    sub = (missing == 0).T  # sub[i, j]: C_j is a subset of C_i
    strict = sub & ~sub.T
    candidate = sub & (out[:, None] != out[None, :])
    candidate[0, :] = False
    strict_f = strict.astype(np.float32)
    blocked = np.zeros_like(candidate)
    for o in np.unique(out):
        rows = out == o
        # some gamma with outcome o lies strictly between a and b
        blocked[rows] = (strict_f[rows][:, rows] @ strict_f[rows]) > 0
    return candidate & ~blocked


def _default_accepted(C: np.ndarray, out: np.ndarray) -> bool:
    """Is row 0 (the default) in the grounded extension of the framework mined from ``C``?"""
    A = _attack_matrix(C, out)
    accepted = np.zeros(len(C), dtype=bool)
    defeated = np.zeros(len(C), dtype=bool)
    while not (accepted[0] or defeated[0]):
        fresh = ~accepted & ~defeated & ~(A & ~defeated[:, None]).any(axis=0)
        if not fresh.any():
            break
        accepted |= fresh
        defeated |= A[fresh].any(axis=0)
    return bool(accepted[0])


def _with_default(C_cases: np.ndarray, codes: np.ndarray, default_code: int):
    C = np.vstack([np.zeros((1, C_cases.shape[1]), dtype=bool), C_cases])
    return C, np.concatenate([[default_code], codes])


def _mine(cb: Casebase):
    chars = [frozenset()] + [c.characterisation for c in cb.cases]
    C = char_matrix(chars, cb.vocabulary)
    labels = [cb.default_outcome] + [c.outcome for c in cb.cases]
    codes = {o: k for k, o in enumerate(sorted(set(labels)))}
    out = np.array([codes[o] for o in labels], dtype=np.int64)
    src, dst = np.nonzero(_attack_matrix(C, out))
    return C, src, dst


def mine_af(cb: Casebase) -> ArgumentationFramework:
    """The framework mined from the casebase alone (no new case)."""
    _, src, dst = _mine(cb)
    args = range(len(cb.cases) + 1)
    return ArgumentationFramework(args, zip(src.tolist(), dst.tolist()))


def add_new_case(af_d: ArgumentationFramework, cb: Casebase, new: frozenset) -> ArgumentationFramework:
    """Extend AF(D) with the new case, which attacks every case irrelevant to it."""
    if not new <= frozenset(cb.vocabulary):
        raise VocabularyError(f"new case {render_characterisation(new)} is not drawn from the vocabulary")
    targets = [case_arg(i) for i, c in enumerate(cb.cases) if not c.characterisation <= new]
    return ArgumentationFramework(
        af_d.arguments + (NEW_ARG,),
        list(af_d.attacks) + [(NEW_ARG, t) for t in targets],
    )


@dataclass(frozen=True)
class Prediction:
    outcome: str
    grounded: GroundedResult
    new_case_characterisation: frozenset
    af: ArgumentationFramework


@dataclass(frozen=True)
class Model:
    variant: str
    strategy: str
    params: TreeParams | None
    tree: DecisionTree
    casebase: Casebase
    seed: int | None = None
    order_policy: str = "specificity"
    encoding: dict | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def default_outcome(self) -> str:
        return self.casebase.default_outcome

    @property
    def non_default_outcome(self) -> str:
        nd = self.casebase.non_default_outcome
        if nd is not None:
            return nd
        others = [c for c in self.tree.classes if c != self.default_outcome]
        return others[0] if others else f"not {self.default_outcome}"

    @property
    def vocabulary(self) -> tuple:
        return self.casebase.vocabulary

    @cached_property
    def _mined(self):
        return _mine(self.casebase)

    @cached_property
    def af_d(self) -> ArgumentationFramework:
        _, src, dst = self._mined
        return ArgumentationFramework(range(len(self.casebase.cases) + 1), zip(src.tolist(), dst.tolist()))

    @cached_property
    def argument_index(self) -> dict:
        index = {DEFAULT_ARG: None}
        index.update({case_arg(i): c for i, c in enumerate(self.casebase.cases)})
        return index

    def argument_case(self, arg) -> Case | None:
        """The case behind ``arg``; ``None`` for the default and new-case arguments."""
        return self.argument_index.get(arg)

    def characterise(self, row) -> frozenset:
        return binarise(row, self.vocabulary)

    @cached_property
    def _case_bits(self):
        """Case characterisations as a boolean matrix, and outcome codes (0 = default)."""
        C = char_matrix([c.characterisation for c in self.casebase.cases], self.vocabulary)
        codes = np.array([c.outcome != self.default_outcome for c in self.casebase.cases], dtype=np.int64)
        return C, codes

    def _outcome_bits(self, bits: np.ndarray) -> str:
        key = bits.tobytes()
        if key not in self._cache:
            C, codes = self._case_bits
            relevant = ~(C & ~bits[None, :]).any(axis=1)
            accepted = _default_accepted(*_with_default(C[relevant], codes[relevant], 0))
            self._cache[key] = self.default_outcome if accepted else self.non_default_outcome
        return self._cache[key]

    def outcome_for(self, char: frozenset) -> str:
        """Classify a characterisation using only the cases relevant to it (memoised).

        Cases irrelevant to the new case are attacked by it and it is
        unattacked, so they can never be accepted nor stop the default
        being defended. Attacks among relevant cases do not depend on the
        others: anything strictly between two relevant cases is relevant.
        """
        return self._outcome_bits(char_matrix([char], self.vocabulary)[0])

    def predict_many(self, X) -> list[str]:
        return [self._outcome_bits(r) for r in binarise_matrix(X, self.vocabulary)]


def predict_characterisation(model: Model, char: frozenset) -> Prediction:
    af = add_new_case(model.af_d, model.casebase, char)
    g = grounded(af)
    outcome = model.default_outcome if DEFAULT_ARG in g.extension else model.non_default_outcome
    return Prediction(outcome, g, char, af)


def focused_prediction(model: Model, char: frozenset) -> Prediction:
    """Like :func:`predict_characterisation`, on the part of AF(D, N) a dispute tree can use.

    Keeps the default, the cases relevant to the new case, the irrelevant
    cases attacking those, and the new case. An irrelevant case is always
    defeated by the unattacked new case, its cheapest possible defeater, so
    the grounded status of the default and the minimal dispute tree are
    unchanged while the framework stays small.
    """
    if not char <= frozenset(model.vocabulary):
        raise VocabularyError(f"new case {render_characterisation(char)} is not drawn from the vocabulary")
    C, src, dst = model._mined
    bits = char_matrix([char], model.vocabulary)[0]
    relevant = ~(C & ~bits[None, :]).any(axis=1)
    into = relevant[dst]
    src, dst = src[into].tolist(), dst[into].tolist()
    outsiders = sorted({a for a in src if not relevant[a]})
    args = np.flatnonzero(relevant).tolist() + outsiders + [NEW_ARG]
    af = ArgumentationFramework(args, list(zip(src, dst)) + [(NEW_ARG, a) for a in outsiders])
    g = grounded(af)
    outcome = model.default_outcome if DEFAULT_ARG in g.extension else model.non_default_outcome
    return Prediction(outcome, g, char, af)


def predict(model: Model, row) -> Prediction:
    """Binarise ``row``, build AF(D, N) and read the outcome off the grounded extension."""
    return predict_characterisation(model, model.characterise(row))


def _resolve_default(y, default_outcome):
    if default_outcome in (None, "auto"):
        return majority_label([str(v) for v in y])
    return str(default_outcome)


def fit_regular(
    X,
    y,
    params: TreeParams,
    strategy: Strategy = "majority",
    default_outcome: str | None = None,
    feature_names=None,
    seed: int | None = None,
    tree: DecisionTree | None = None,
) -> Model:
    """Tree, binarisation, incoherence strategy; the framework is mined lazily.

    ``tree`` may be supplied to reuse an already grown tree.
    """
    default = _resolve_default(y, default_outcome)
    if tree is None:
        tree = grow(X, y, params, default_outcome=default, feature_names=feature_names)
    cb = apply_strategy(binarise_dataset(X, y, tree, default), strategy)
    return Model("regular", strategy, params, tree, cb, seed)


def cumulative_casebase(cb: Casebase, order_policy: OrderPolicy = "specificity") -> Casebase:
    """Keep only the cases the casebase built so far would misclassify."""
    if order_policy == "specificity":
        key = char_key_for(cb.vocabulary)
        ordered = sorted(cb.cases, key=lambda c: (key(c.characterisation), c.outcome, c.provenance))
    elif order_policy == "given":
        ordered = list(cb.cases)
    else:
        raise ValueError(f"unknown order policy {order_policy!r}")
    C = char_matrix([c.characterisation for c in ordered], cb.vocabulary)
    codes = np.array([c.outcome != cb.default_outcome for c in ordered], dtype=np.int64)
    retained: list[int] = []
    for i in range(len(ordered)):
        kept = np.array(retained, dtype=np.int64)
        rel = kept[~(C[kept] & ~C[i]).any(axis=1)]
        predicted = 0 if _default_accepted(*_with_default(C[rel], codes[rel], 0)) else 1
        if predicted != codes[i]:
            retained.append(i)
    return Casebase(tuple(ordered[i] for i in retained), cb.vocabulary, cb.default_outcome, cb.outcomes)


def fit_cumulative(
    X,
    y,
    params: TreeParams,
    strategy: Strategy = "majority",
    default_outcome: str | None = None,
    order_policy: OrderPolicy = "specificity",
    feature_names=None,
    seed: int | None = None,
    tree: DecisionTree | None = None,
) -> Model:
    regular = fit_regular(X, y, params, strategy, default_outcome, feature_names, seed, tree)
    cb = cumulative_casebase(regular.casebase, order_policy)
    return Model("cumulative", strategy, params, regular.tree, cb, seed, order_policy)


def fit(variant: Variant, X, y, params: TreeParams, strategy: Strategy = "majority", **kwargs) -> Model:
    if variant == "regular":
        kwargs.pop("order_policy", None)
        return fit_regular(X, y, params, strategy, **kwargs)
    if variant == "cumulative":
        return fit_cumulative(X, y, params, strategy, **kwargs)
    raise ValueError(f"unknown variant {variant!r}")


def remove_spikes(af: ArgumentationFramework, default_arg=DEFAULT_ARG) -> ArgumentationFramework:
    """Keep the default argument and every argument with an attack path to it."""
    reached = {default_arg}
    frontier = [default_arg]
    while frontier:
        target = frontier.pop()
        for a in af.attackers_of(target):
            if a not in reached:
                reached.add(a)
                frontier.append(a)
    return af.restrict(reached)


def model_size(model: Model) -> int:
    """Arguments left after spike removal, the default included."""
    return len(remove_spikes(model.af_d))


def argument_label(model: Model, arg, new_case: frozenset | None = None) -> str:
    if arg == DEFAULT_ARG:
        return f"default, {{}}: {model.default_outcome}"
    if arg == NEW_ARG:
        return f"{render_characterisation(new_case or frozenset())}: ?"
    case = model.argument_case(arg)
    return f"{case} [{arg}]"


def model_to_dict(model: Model) -> dict:
    return {
        "format": MODEL_FORMAT,
        "variant": model.variant,
        "strategy": model.strategy,
        "order_policy": model.order_policy,
        "params": None if model.params is None else {
            "max_depth": model.params.max_depth,
            "max_leaf_nodes": model.params.max_leaf_nodes,
        },
        "seed": model.seed,
        "default_outcome": model.default_outcome,
        "tree": tree_to_dict(model.tree),
        "casebase": casebase_to_dict(model.casebase),
        "encoding": model.encoding,
    }


def model_from_dict(data: dict) -> Model:
    if data.get("format") != MODEL_FORMAT:
        raise VocabularyError(f"not a model document (format {data.get('format')!r})")
    tree = tree_from_dict(data["tree"])
    cb = casebase_from_dict(data["casebase"])
    if tuple(cb.vocabulary) != extract_vocabulary(tree):
        raise VocabularyError("casebase vocabulary does not match the tree's split predicates")
    params = data.get("params")
    return Model(
        data["variant"],
        data["strategy"],
        None if params is None else TreeParams(params["max_depth"], params["max_leaf_nodes"]),
        tree,
        cb,
        data.get("seed"),
        data.get("order_policy", "specificity"),
        data.get("encoding"),
    )


def dumps_model(model: Model) -> str:
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n"


def save_model(model: Model, path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path) -> Model:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
