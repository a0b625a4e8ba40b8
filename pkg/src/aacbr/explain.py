"""Local explanations: minimal arbitrated dispute trees and decision paths."""

from __future__ import annotations

import heapq
from collections.abc import Callable
from dataclasses import dataclass

from aacbr.af import ArgumentationFramework, GroundedResult, order_key
from aacbr.casebase import Predicate
from aacbr.dtree import DecisionTree, Leaf, leaf_path
from aacbr.engine import DEFAULT_ARG, Model, Prediction, argument_label
from aacbr.errors import ExplanationError

WIN = "W"
LOSE = "L"


@dataclass(frozen=True)
class AdtNode:
    status: str
    argument: object
    children: tuple = ()


@dataclass(frozen=True)
class AdtMetrics:
    depth: int
    node_count: int
    unique_argument_count: int

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.depth, self.node_count, self.unique_argument_count)


def _min_costs(af: ArgumentationFramework):
    """Least node counts of winning (W) and losing (L) subtrees.

    A W subtree costs one plus the L costs of all attackers; an L subtree
    costs one plus its cheapest W defeater. Costs only grow along a
    derivation, so settling W nodes cheapest-first (Knuth's extension of
    Dijkstra to AND/OR graphs) yields the minimum over all finite trees.
    Equal costs settle in argument order, which fixes the defeater tie-break.
    """
    pending = {a: len(af.attackers_of(a)) for a in af.arguments}
    partial = dict.fromkeys(af.arguments, 0)
    win: dict = {}
    lose: dict = {}
    heap = [(1, order_key(a), a) for a in af.arguments if pending[a] == 0]
    heapq.heapify(heap)
    while heap:
        cost, _, a = heapq.heappop(heap)
        if a in win:
            continue
        win[a] = cost
        for b in af.targets_of(a):
            if b in lose:
                continue
            lose[b] = (cost + 1, a)
            for c in af.targets_of(b):
                pending[c] -= 1
                partial[c] += cost + 1
                if pending[c] == 0 and c not in win:
                    heapq.heappush(heap, (1 + partial[c], order_key(c), c))
    return win, lose


def minimal_adt(af: ArgumentationFramework, grounded: GroundedResult, default_arg=DEFAULT_ARG) -> AdtNode:
    """The arbitrated dispute tree for ``default_arg`` with the fewest nodes.

    The root is W when the default argument is accepted and L otherwise.
    Raises :class:`ExplanationError` if ``grounded`` does not belong to
    ``af`` or if the default argument is neither accepted nor defeated.
    """
    win, lose = _min_costs(af)
    if frozenset(win) != grounded.extension:
        raise ExplanationError("grounded extension does not match the framework")

    def build_win(a):
        return AdtNode(WIN, a, tuple(build_lose(b) for b in af.attackers_of(a)))

    def build_lose(b):
        return AdtNode(LOSE, b, (build_win(lose[b][1]),))

    if default_arg in win:
        return build_win(default_arg)
    if default_arg in lose:
        return build_lose(default_arg)
    raise ExplanationError("the default argument is undecided; no arbitrated dispute tree exists")


def explain_prediction(prediction: Prediction) -> AdtNode:
    return minimal_adt(prediction.af, prediction.grounded, DEFAULT_ARG)


def prediction_labeller(model: Model, prediction: Prediction) -> Callable[[object], str]:
    return lambda arg: argument_label(model, arg, prediction.new_case_characterisation)


def adt_cost(af: ArgumentationFramework, arg, status: str = WIN) -> int | None:
    """Node count of the minimal tree rooted at ``(status, arg)``, or ``None``."""
    win, lose = _min_costs(af)
    if status == WIN:
        return win.get(arg)
    return lose[arg][0] if arg in lose else None


def adt_metrics(adt: AdtNode) -> AdtMetrics:
    nodes = 0
    unique = set()
    depth = 0
    stack = [(adt, 1)]
    while stack:
        node, d = stack.pop()
        nodes += 1
        unique.add(node.argument)
        depth = max(depth, d)
        stack.extend((c, d + 1) for c in node.children)
    return AdtMetrics(depth, nodes, len(unique))


def adt_to_text(adt: AdtNode, label: Callable[[object], str] = str) -> str:
    lines = []

    def walk(node, indent):
        lines.append(f"{'  ' * indent}({node.status}) {label(node.argument)}")
        for c in node.children:
            walk(c, indent + 1)

    walk(adt, 0)
    return "\n".join(lines) + "\n"


def adt_to_dot(adt: AdtNode, label: Callable[[object], str] = str) -> str:
    """DOT rendering; edges point from attacker (child) to attacked (parent)."""
    lines = ["digraph ADT {", "  rankdir=BT;"]
    counter = 0

    def walk(node):
        nonlocal counter
        me = f"n{counter}"
        counter += 1
        text = f"({node.status}, {label(node.argument)})".replace('"', '\\"')
        lines.append(f'  {me} [label="{text}"];')
        for c in node.children:
            lines.append(f"  {walk(c)} -> {me};")
        return me

    walk(adt)
    lines.append("}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DecisionPath:
    steps: tuple  # (Predicate, satisfied) per split visited
    leaf: Leaf

    def __len__(self) -> int:
        return len(self.steps) + 1

    @property
    def metrics(self) -> AdtMetrics:
        n = len(self)
        return AdtMetrics(n, n, n)

    def to_text(self) -> str:
        lines = [f"{p} is {'true' if ok else 'false'}" for p, ok in self.steps]
        lines.append(f"predict {self.leaf.label} {list(self.leaf.counts)}")
        return "\n".join(lines) + "\n"


def decision_path(tree: DecisionTree, row) -> DecisionPath:
    nodes = leaf_path(tree, row)
    steps = tuple(
        (Predicate(n.feature, n.threshold, tree.feature_name(n.feature)), bool(row[n.feature] <= n.threshold))
        for n in nodes[:-1]
    )
    return DecisionPath(steps, nodes[-1])
