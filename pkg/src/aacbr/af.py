"""Abstract argumentation frameworks and grounded semantics."""

from __future__ import annotations

from collections.abc import Callable, Hashable, Iterable
from dataclasses import dataclass
from functools import cached_property

from aacbr.errors import UnknownArgumentError

ArgumentId = Hashable


def order_key(arg):
    return (type(arg).__name__, arg)


@dataclass(frozen=True)
class ArgumentationFramework:
    """A finite set of arguments and a binary attack relation over them.

    Arguments are kept in a canonical sorted order so that iteration (and
    anything rendered from it) does not depend on insertion order.
    """

    arguments: tuple
    attacks: frozenset

    def __init__(self, arguments: Iterable, attacks: Iterable = ()):
        args = tuple(sorted(set(arguments), key=order_key))
        atts = frozenset((a, b) for a, b in attacks)
        known = set(args)
        for a, b in atts:
            if a not in known or b not in known:
                raise UnknownArgumentError(f"attack ({a!r}, {b!r}) has an endpoint outside the framework")
        object.__setattr__(self, "arguments", args)
        object.__setattr__(self, "attacks", atts)

    @cached_property
    def _argument_set(self) -> frozenset:
        return frozenset(self.arguments)

    @cached_property
    def _attackers(self) -> dict:
        index = {a: [] for a in self.arguments}
        for a, b in self.attacks:
            index[b].append(a)
        return {a: tuple(sorted(v, key=order_key)) for a, v in index.items()}

    @cached_property
    def _targets(self) -> dict:
        index = {a: [] for a in self.arguments}
        for a, b in self.attacks:
            index[a].append(b)
        return {a: tuple(sorted(v, key=order_key)) for a, v in index.items()}

    def __contains__(self, arg) -> bool:
        return arg in self._argument_set

    def __len__(self) -> int:
        return len(self.arguments)

    def _check(self, arg):
        if arg not in self._argument_set:
            raise UnknownArgumentError(f"unknown argument {arg!r}")

    def attackers_of(self, arg) -> tuple:
        self._check(arg)
        return self._attackers[arg]

    def targets_of(self, arg) -> tuple:
        self._check(arg)
        return self._targets[arg]

    def restrict(self, keep: Iterable) -> ArgumentationFramework:
        """Sub-framework induced by ``keep``."""
        keep = set(keep)
        return ArgumentationFramework(keep, ((a, b) for a, b in self.attacks if a in keep and b in keep))


@dataclass(frozen=True)
class GroundedResult:
    extension: frozenset
    rank: dict

    def __contains__(self, arg) -> bool:
        return arg in self.extension


def attackers_of(af: ArgumentationFramework, arg) -> set:
    return set(af.attackers_of(arg))


def defends(af: ArgumentationFramework, defenders: Iterable, target) -> bool:
    """True iff every attacker of ``target`` is attacked by some defender."""
    defenders = set(defenders)
    for attacker in af.attackers_of(target):
        if not any(d in defenders for d in af.attackers_of(attacker)):
            return False
    return True


def grounded(af: ArgumentationFramework) -> GroundedResult:
    """Least fixpoint of the defence function, with the round each argument enters.

    Round 0 holds the unattacked arguments; round i+1 holds the arguments all
    of whose attackers are attacked by rounds 0..i. Each attack edge is visited
    a bounded number of times, so this is linear in the framework size.
    """
    undefeated_attackers = {a: len(af._attackers[a]) for a in af.arguments}
    rank = {}
    defeated = set()
    current = [a for a in af.arguments if undefeated_attackers[a] == 0]
    level = 0
    while current:
        for a in current:
            rank[a] = level
        upcoming = []
        for a in current:
            for b in af._targets[a]:
                if b in defeated:
                    continue
                defeated.add(b)
                for c in af._targets[b]:
                    undefeated_attackers[c] -= 1
                    if undefeated_attackers[c] == 0 and c not in rank and c not in defeated:
                        upcoming.append(c)
        current = sorted(upcoming, key=order_key)
        level += 1
    return GroundedResult(frozenset(rank), rank)


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(af: ArgumentationFramework, label: Callable[[object], str] = str, name: str = "AF") -> str:
    """Render ``af`` as a DOT digraph; node and edge order is canonical."""
    ids = {a: f"n{i}" for i, a in enumerate(af.arguments)}
    lines = [f"digraph {name} {{", "  rankdir=BT;"]
    for a in af.arguments:
        lines.append(f'  {ids[a]} [label="{_dot_escape(label(a))}"];')
    for a, b in sorted(af.attacks, key=lambda e: (order_key(e[0]), order_key(e[1]))):
        lines.append(f"  {ids[a]} -> {ids[b]};")
    lines.append("}")
    return "\n".join(lines) + "\n"
