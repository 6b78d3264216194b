"""Hierarchical Mealy machine data model and execution semantics.

A hierarchy is a tree of Mealy machines. Every state (node) of a machine
either refines into a child machine or is a *flat* state. Only flat states
occur in trajectories; inputs that a machine does not support bubble up to
the ancestors, and a transition into a non-flat node descends through start
states until a flat state is reached.

Node and machine ids come from process-wide counters, so ids stay unique
when hierarchies are grafted into one another.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

INF = math.inf

_node_ids = itertools.count()
_machine_ids = itertools.count()


def new_node_id() -> int:
    return next(_node_ids)


def new_machine_id() -> int:
    return next(_machine_ids)


class HierarchyError(ValueError):
    """Raised when a hierarchy is used or modified inconsistently."""


@dataclass
class MealyMachine:
    """One machine of a hierarchy.

    ``delta`` and ``gamma`` are keyed by ``(state, input)``; ``gamma`` must be
    defined exactly where ``delta`` is.
    """

    id: int
    states: list[int]
    delta: dict[tuple[int, int], int]
    gamma: dict[tuple[int, int], float]
    start: int
    name: str = ""
    labels: dict[int, str] = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        states: Sequence[str],
        start: str,
        transitions: Iterable[tuple[str, int, str, float]] = (),
        name: str = "",
    ) -> "MealyMachine":
        """Create a machine with freshly allocated ids from state names.

        ``transitions`` holds ``(from, input_id, to, cost)`` with state names.
        """
        if len(set(states)) != len(states):
            raise HierarchyError(f"duplicate state names in machine {name!r}")
        ids = {s: new_node_id() for s in states}
        if start not in ids:
            raise HierarchyError(f"start state {start!r} not among states of {name!r}")
        delta: dict[tuple[int, int], int] = {}
        gamma: dict[tuple[int, int], float] = {}
        for src, x, dst, cost in transitions:
            try:
                key = (ids[src], x)
                delta[key] = ids[dst]
            except KeyError as exc:
                raise HierarchyError(f"unknown state {exc.args[0]!r} in machine {name!r}") from None
            gamma[key] = float(cost)
        mid = new_machine_id()
        return cls(
            id=mid,
            states=[ids[s] for s in states],
            delta=delta,
            gamma=gamma,
            start=ids[start],
            name=name or f"M{mid}",
            labels={v: k for k, v in ids.items()},
        )

    def node(self, label: str) -> int:
        for q, lab in self.labels.items():
            if lab == label:
                return q
        raise KeyError(label)


@dataclass
class Trajectory:
    steps: list[tuple[int, int]]
    end: int | None

    def __len__(self) -> int:
        return len(self.steps)


class Hierarchy:
    """A tree of :class:`MealyMachine` objects sharing one input alphabet.

    ``child`` maps non-flat nodes to their child machine, ``parent`` maps every
    non-root machine to ``(parent machine, parent node)`` and ``owner`` maps
    every node to the machine that contains it.
    """

    def __init__(self, alphabet: Sequence[str]):
        if len(set(alphabet)) != len(alphabet):
            raise HierarchyError("duplicate input names in alphabet")
        self.alphabet: list[str] = list(alphabet)
        self.machines: dict[int, MealyMachine] = {}
        self.child: dict[int, int] = {}
        self.parent: dict[int, tuple[int, int]] = {}
        self.owner: dict[int, int] = {}
        self.root: int | None = None

    # construction

    def symbol(self, name: str) -> int:
        try:
            return self.alphabet.index(name)
        except ValueError:
            raise KeyError(f"unknown input {name!r}") from None

    def add_machine(
        self,
        states: Sequence[str],
        start: str,
        transitions: Iterable[tuple[str, str, str, float]] = (),
        name: str = "",
        parent: int | None = None,
    ) -> int:
        """Build a machine from names and insert it.

        Transitions use input *names*. With ``parent=None`` the machine becomes
        the root (only allowed once); otherwise ``parent`` is the node it
        refines.
        """
        m = MealyMachine.build(
            states, start, [(a, self.symbol(x), b, c) for a, x, b, c in transitions], name
        )
        self.insert(m, parent)
        return m.id

    def insert(self, m: MealyMachine, parent: int | None = None) -> None:
        if m.id in self.machines:
            raise HierarchyError(f"machine {m.id} already present")
        if parent is None:
            if self.root is not None:
                raise HierarchyError("hierarchy already has a root")
            self.root = m.id
        else:
            if parent not in self.owner:
                raise HierarchyError(f"unknown parent node {parent}")
            if parent in self.child:
                raise HierarchyError(f"node {parent} already refines machine {self.child[parent]}")
            self.child[parent] = m.id
            self.parent[m.id] = (self.owner[parent], parent)
        self.machines[m.id] = m
        for q in m.states:
            if q in self.owner:
                raise HierarchyError(f"node {q} already belongs to machine {self.owner[q]}")
            self.owner[q] = m.id

    def graft(self, other: "Hierarchy", node: int) -> None:
        """Hang ``other`` below ``node``; ``other``'s machines become shared."""
        if other.alphabet != self.alphabet:
            raise HierarchyError("alphabet mismatch")
        if other.root is None:
            raise HierarchyError("cannot graft an empty hierarchy")
        if node in self.child:
            raise HierarchyError(f"node {node} already refines a machine")
        clash = other.owner.keys() & self.owner.keys()
        if clash or other.machines.keys() & self.machines.keys():
            raise HierarchyError("grafted hierarchy shares ids with the target")
        self.machines.update(other.machines)
        self.owner.update(other.owner)
        self.child.update(other.child)
        self.parent.update(other.parent)
        self.child[node] = other.root
        self.parent[other.root] = (self.owner[node], node)

    # queries

    @property
    def root_machine(self) -> MealyMachine:
        if self.root is None:
            raise HierarchyError("empty hierarchy")
        return self.machines[self.root]

    def is_flat(self, q: int) -> bool:
        return q not in self.child

    def label(self, q: int) -> str:
        return self.machines[self.owner[q]].labels.get(q, str(q))

    def flat_states(self) -> Iterator[int]:
        for q in self.owner:
            if q not in self.child:
                yield q

    def ancestors(self, m: int) -> list[int]:
        """Machines strictly above ``m``, nearest first."""
        out = []
        while m in self.parent:
            m = self.parent[m][0]
            out.append(m)
        return out

    def chain(self, q: int) -> list[int]:
        """Machine containing ``q`` followed by its ancestors up to the root."""
        m = self.owner[q]
        return [m, *self.ancestors(m)]

    def subtree(self, m: int) -> list[int]:
        """Machines in the subtree rooted at ``m`` (preorder)."""
        out, stack = [], [m]
        while stack:
            k = stack.pop()
            out.append(k)
            for q in reversed(self.machines[k].states):
                c = self.child.get(q)
                if c is not None:
                    stack.append(c)
        return out

    def contained(self, m: int) -> set[int]:
        """Flat states that are descendants of machine ``m``."""
        return {q for k in self.subtree(m) for q in self.machines[k].states if q not in self.child}

    def depth(self) -> int:
        """Number of machines on the longest root-to-leaf chain."""
        if self.root is None:
            return 0
        best, stack = 0, [(self.root, 1)]
        while stack:
            m, d = stack.pop()
            best = max(best, d)
            for q in self.machines[m].states:
                c = self.child.get(q)
                if c is not None:
                    stack.append((c, d + 1))
        return best

    def max_states(self) -> int:
        return max((len(m.states) for m in self.machines.values()), default=0)

    def find(self, label: str) -> int:
        """Resolve a node by label; ``machine:state`` disambiguates."""
        if ":" in label:
            mname, sname = label.rsplit(":", 1)
            hits = [
                q
                for m in self.machines.values()
                if m.name == mname
                for q, lab in m.labels.items()
                if lab == sname
            ]
        else:
            hits = [q for m in self.machines.values() for q, lab in m.labels.items() if lab == label]
        if not hits:
            raise KeyError(f"no state named {label!r}")
        if len(hits) > 1:
            raise KeyError(f"state name {label!r} is ambiguous; use machine:state")
        return hits[0]

    def machine_by_name(self, name: str) -> int:
        hits = [m.id for m in self.machines.values() if m.name == name]
        if len(hits) != 1:
            raise KeyError(f"{'no' if not hits else 'ambiguous'} machine named {name!r}")
        return hits[0]

    def __repr__(self) -> str:
        return (
            f"Hierarchy(machines={len(self.machines)}, nodes={len(self.owner)}, "
            f"depth={self.depth()}, |alphabet|={len(self.alphabet)})"
        )


def resolve_start(h: Hierarchy, m: int) -> int:
    """Follow start states downward from machine ``m`` to a flat state."""
    q = h.machines[m].start
    child = h.child
    while q in child:
        q = h.machines[child[q]].start
    return q


def step(h: Hierarchy, q: int, x: int) -> tuple[int, float] | None:
    """Hierarchical transition and output for node ``q`` under input ``x``.

    Returns ``(next flat state, cost)`` or ``None`` when no machine on the
    ancestor chain supports ``x`` (the system stops).
    """
    machines, child, parent, owner = h.machines, h.child, h.parent, h.owner
    node = q
    m = owner[node]
    while True:
        mm = machines[m]
        v = mm.delta.get((node, x))
        if v is not None:
            cost = mm.gamma[(node, x)]
            while v in child:
                v = machines[child[v]].start
            return v, cost
        up = parent.get(m)
        if up is None:
            return None
        m, node = up


def run_plan(h: Hierarchy, q0: int, plan: Iterable[int]) -> tuple[Trajectory, float]:
    """Execute ``plan`` from flat state ``q0``.

    A stop makes the cost infinite; the trajectory is truncated at the
    stopping step (which is still recorded) and ``end`` is ``None``.
    """
    if not h.is_flat(q0):
        raise HierarchyError(f"start node {q0} is not flat")
    steps: list[tuple[int, int]] = []
    q, total = q0, 0.0
    for x in plan:
        steps.append((q, x))
        nxt = step(h, q, x)
        if nxt is None:
            return Trajectory(steps, None), INF
        q, c = nxt
        total += c
    return Trajectory(steps, q), total


def validate(h: Hierarchy) -> list[str]:
    """Collect violations of the hierarchy invariants (empty list when sound)."""
    problems: list[str] = []
    if h.root is None:
        return ["tree: hierarchy has no root"]
    if h.root not in h.machines:
        problems.append(f"tree: root {h.root} is not a machine")
        return problems
    if h.root in h.parent:
        problems.append("tree: root machine has a parent")
    nsym = len(h.alphabet)

    seen: dict[int, int] = {}
    shared: set[int] = set()
    for m in h.machines.values():
        for q in m.states:
            if q in seen and seen[q] != m.id:
                problems.append(f"disjointness: node {q} in machines {seen[q]} and {m.id}")
                shared.add(q)
            seen[q] = m.id
        if len(set(m.states)) != len(m.states):
            problems.append(f"disjointness: machine {m.id} lists a state twice")
        local = set(m.states)
        if m.start not in local:
            problems.append(f"start: machine {m.id} start {m.start} not among its states")
        if m.delta.keys() != m.gamma.keys():
            problems.append(f"gamma/delta domain mismatch in machine {m.id}")
        for (q, x), v in m.delta.items():
            if q not in local or v not in local:
                problems.append(f"delta: machine {m.id} transition ({q},{x})->{v} leaves the machine")
            if not 0 <= x < nsym:
                problems.append(f"delta: machine {m.id} uses unknown input {x}")
        for key, c in m.gamma.items():
            if not (c >= 0 and c < INF):
                problems.append(f"cost: machine {m.id} has invalid cost {c} at {key}")

    for q, m in h.owner.items():
        if q not in shared and seen.get(q) != m:
            problems.append(f"registry: owner of node {q} is inconsistent")
    for q, c in h.child.items():
        if c not in h.machines:
            problems.append(f"tree: node {q} refines unknown machine {c}")
        elif h.parent.get(c) != (h.owner.get(q), q):
            problems.append(f"tree: parent link of machine {c} does not match node {q}")
    children = list(h.child.values())
    if len(children) != len(set(children)):
        problems.append("tree: a machine refines more than one node")
    for m in h.machines:
        if m != h.root and m not in h.parent:
            problems.append(f"tree: machine {m} is detached")

    # reachability from the root also rules out cycles
    reached: set[int] = set()
    stack = [h.root]
    while stack:
        m = stack.pop()
        if m in reached:
            problems.append(f"tree: cycle through machine {m}")
            break
        reached.add(m)
        for q in h.machines[m].states:
            c = h.child.get(q)
            if c is not None and c in h.machines:
                stack.append(c)
    if not problems and reached != h.machines.keys():
        problems.append("tree: some machines are unreachable from the root")
    return problems
