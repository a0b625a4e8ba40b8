"""CART decision trees grown best-first under Gini impurity.

Only numeric ``x[f] <= t`` splits are supported; categorical columns are
expected to arrive one-hot encoded. Growth is pre-pruned by a maximum depth
(counted in splits from the root) and a maximum number of leaves.
"""

from __future__ import annotations

import heapq
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Union

import numpy as np

from aacbr.casebase import format_threshold
from aacbr.errors import ArityError, EmptyNodeError

# Relative slack when comparing impurity decreases, so float noise cannot
# override the feature/threshold tie-break order.
_TIE_EPS = 1e-9


@dataclass(frozen=True)
class TreeParams:
    max_depth: int
    max_leaf_nodes: int

    def __post_init__(self):
        if self.max_depth < 1 or self.max_leaf_nodes < 1:
            raise ValueError(f"tree parameters must be positive, got {self}")


@dataclass(frozen=True)
class Leaf:
    label: str
    counts: tuple


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "Node"
    right: "Node"
    counts: tuple


Node = Union[Leaf, Split]


@dataclass(frozen=True)
class DecisionTree:
    root: Node
    classes: tuple
    feature_names: tuple
    default_outcome: str

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def feature_name(self, f: int) -> str:
        return self.feature_names[f]


def majority_label(labels: Sequence, tie: str | None = None) -> str:
    """Most frequent label; ties go to ``tie`` if it is among the tied, else the smallest."""
    counts = Counter(labels)
    if not counts:
        raise EmptyNodeError("no labels to take a majority of")
    top = max(counts.values())
    winners = sorted(label for label, n in counts.items() if n == top)
    return tie if tie in winners else winners[0]


def gini(class_counts) -> float:
    counts = np.asarray(class_counts, dtype=float)
    n = counts.sum()
    if n <= 0:
        raise EmptyNodeError("Gini impurity of an empty node")
    p = counts / n
    return float(1.0 - np.sum(p * p))


def _encode(y, classes):
    index = {c: i for i, c in enumerate(classes)}
    return np.fromiter((index[v] for v in y), dtype=np.int64, count=len(y))


def _scan(X, codes, n_classes):
    """Best split of the rows ``X``/``codes`` as (weighted_decrease, feature, threshold)."""
    n = len(codes)
    onehot = np.eye(n_classes)[codes]
    total = onehot.sum(axis=0)
    parent = float(total @ total) / n
    best = None
    candidates = []
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        values = X[order, f]
        change = np.nonzero(values[:-1] < values[1:])[0]
        if len(change) == 0:
            continue
        cum = np.cumsum(onehot[order], axis=0)
        left = cum[change]
        right = total - left
        n_left = change + 1.0
        score = (left * left).sum(axis=1) / n_left + (right * right).sum(axis=1) / (n - n_left)
        gains = score - parent
        lo, hi = values[change], values[change + 1]
        thresholds = (lo + hi) / 2.0
        thresholds = np.where(thresholds < hi, thresholds, lo)
        k = int(np.argmax(gains))
        candidates.append((float(gains[k]), f, gains, thresholds))
        if best is None or gains[k] > best:
            best = float(gains[k])
    if best is None:
        return None
    floor = best - _TIE_EPS * max(1.0, abs(best))
    for _, f, gains, thresholds in candidates:
        hits = np.nonzero(gains >= floor)[0]
        if len(hits):
            k = hits[0]
            return float(gains[k]), f, float(thresholds[k])
    return None  # pragma: no cover


def best_split(X, y) -> tuple[int, float, float] | None:
    """Best Gini split of the rows as ``(feature, threshold, impurity_decrease)``.

    The decrease is the parent impurity minus the size-weighted child
    impurity. Returns ``None`` when no threshold reduces impurity.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or len(X) < 2:
        return None
    classes = tuple(sorted(set(y)))
    if len(classes) < 2:
        return None
    found = _scan(X, _encode(y, classes), len(classes))
    if found is None:
        return None
    gain, f, t = found
    decrease = gain / len(X)
    if decrease <= _TIE_EPS:
        return None
    return f, t, decrease


class _Growing:
    __slots__ = ("idx", "depth", "counts", "split", "left", "right")

    def __init__(self, idx, depth, counts):
        self.idx = idx
        self.depth = depth
        self.counts = counts
        self.split = None
        self.left = self.right = None


def grow(X, y, params: TreeParams, default_outcome: str | None = None, feature_names=None) -> DecisionTree:
    """Grow a CART tree best-first.

    The frontier is ordered by the count-weighted impurity decrease of each
    leaf's best split, oldest leaf first on ties. Growth stops when the
    frontier is empty or the leaf budget is spent.
    """
    X = np.asarray(X, dtype=float)
    y = [str(v) for v in y]
    if len(y) == 0:
        raise EmptyNodeError("cannot grow a tree on no rows")
    if X.ndim != 2 or len(X) != len(y):
        raise ArityError(f"X has shape {X.shape} but there are {len(y)} labels")
    if default_outcome is None:
        default_outcome = majority_label(y)
    classes = tuple(sorted(set(y) | {default_outcome}))
    codes = _encode(y, classes)
    n_classes = len(classes)
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{i}" for i in range(X.shape[1]))
    if len(names) != X.shape[1]:
        raise ArityError(f"{len(names)} feature names for {X.shape[1]} columns")

    def make(idx, depth):
        return _Growing(idx, depth, tuple(int(v) for v in np.bincount(codes[idx], minlength=n_classes)))

    frontier = []
    created = 0

    def consider(node):
        nonlocal created
        order = created
        created += 1
        if node.depth >= params.max_depth or sum(1 for c in node.counts if c) < 2:
            return
        found = _scan(X[node.idx], codes[node.idx], n_classes)
        if found is None or found[0] / len(node.idx) <= _TIE_EPS:
            return
        node.split = found
        heapq.heappush(frontier, (-found[0], order, node))

    root = make(np.arange(len(y)), 0)
    consider(root)
    leaves = 1
    while frontier and leaves < params.max_leaf_nodes:
        _, _, node = heapq.heappop(frontier)
        _, f, t = node.split
        mask = X[node.idx, f] <= t
        node.left = make(node.idx[mask], node.depth + 1)
        node.right = make(node.idx[~mask], node.depth + 1)
        leaves += 1
        consider(node.left)
        consider(node.right)

    def freeze(node):
        if node.left is None:
            top = max(node.counts)
            winners = [c for c, k in zip(classes, node.counts) if k == top]
            label = default_outcome if default_outcome in winners else winners[0]
            return Leaf(label, node.counts)
        _, f, t = node.split
        return Split(f, t, freeze(node.left), freeze(node.right), node.counts)

    return DecisionTree(freeze(root), classes, names, default_outcome)


def _check_row(tree: DecisionTree, row):
    if len(row) != tree.n_features:
        raise ArityError(f"row has {len(row)} values, tree expects {tree.n_features}")


def leaf_path(tree: DecisionTree, row) -> list:
    """Nodes visited from the root to the leaf reached by ``row``."""
    _check_row(tree, row)
    node = tree.root
    path = [node]
    while isinstance(node, Split):
        node = node.left if row[node.feature] <= node.threshold else node.right
        path.append(node)
    return path


def tree_predict(tree: DecisionTree, row) -> str:
    return leaf_path(tree, row)[-1].label


def tree_predict_many(tree: DecisionTree, X) -> list[str]:
    return [tree_predict(tree, row) for row in np.asarray(X, dtype=float)]


def iter_nodes(node: Node):
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, Split):
            stack.append(n.right)
            stack.append(n.left)


def tree_node_count(tree: DecisionTree | Node) -> tuple[int, int, int]:
    """``(total_nodes, leaves, depth)`` with depth counted in nodes (a lone leaf has depth 1)."""
    root = tree.root if isinstance(tree, DecisionTree) else tree

    def depth(n):
        if isinstance(n, Leaf):
            return 1
        return 1 + max(depth(n.left), depth(n.right))

    nodes = list(iter_nodes(root))
    return len(nodes), sum(isinstance(n, Leaf) for n in nodes), depth(root)


def node_to_dict(node: Node, names) -> dict:
    if isinstance(node, Leaf):
        return {"label": node.label, "counts": list(node.counts)}
    return {
        "feature": node.feature,
        "name": names[node.feature],
        "threshold": node.threshold,
        "counts": list(node.counts),
        "left": node_to_dict(node.left, names),
        "right": node_to_dict(node.right, names),
    }


def node_from_dict(data: dict) -> Node:
    if "label" in data:
        return Leaf(data["label"], tuple(data["counts"]))
    return Split(
        int(data["feature"]),
        float(data["threshold"]),
        node_from_dict(data["left"]),
        node_from_dict(data["right"]),
        tuple(data["counts"]),
    )


def tree_to_dict(tree: DecisionTree) -> dict:
    return {
        "classes": list(tree.classes),
        "feature_names": list(tree.feature_names),
        "default_outcome": tree.default_outcome,
        "root": node_to_dict(tree.root, tree.feature_names),
    }


def tree_from_dict(data: dict) -> DecisionTree:
    return DecisionTree(
        node_from_dict(data["root"]),
        tuple(data["classes"]),
        tuple(data["feature_names"]),
        data["default_outcome"],
    )


def tree_to_dot(tree: DecisionTree) -> str:
    lines = ["digraph Tree {"]
    ids = {}
    for i, node in enumerate(iter_nodes(tree.root)):
        ids[id(node)] = f"n{i}"
        if isinstance(node, Leaf):
            text = f"{node.label} {list(node.counts)}"
            lines.append(f'  n{i} [label="{text}", shape=box];')
        else:
            text = f"{tree.feature_name(node.feature)} <= {format_threshold(node.threshold)}"
            lines.append(f'  n{i} [label="{text}"];')
    for node in iter_nodes(tree.root):
        if isinstance(node, Split):
            lines.append(f'  {ids[id(node)]} -> {ids[id(node.left)]} [label="true"];')
            lines.append(f'  {ids[id(node)]} -> {ids[id(node.right)]} [label="false"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
