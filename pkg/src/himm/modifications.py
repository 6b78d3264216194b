"""The four modification operators and the marking discipline.

A modification is applied to a hierarchy in place (composition builds a new
one) and then :func:`mark` records which machines need their exit costs
recomputed. Marked machines always form a subtree containing the root, or
nothing at all.

Sub-hierarchies handed to :class:`AddState` or :class:`Composition` may be a
bare :class:`~himm.core.Hierarchy` (treated as freshly initialised, hence
fully marked) or any object exposing ``hierarchy`` and ``table`` attributes,
such as :class:`himm.exits.ExitComputer`, whose own marks carry over.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union

from .core import Hierarchy, HierarchyError, MealyMachine, new_node_id

Part = Any  # Hierarchy, or something with .hierarchy and .table.marks


class MarkSet(set):
    """Machines whose exit costs are stale."""

    def is_subtree(self, h: Hierarchy) -> bool:
        """True iff empty, or a connected set of machines containing the root."""
        if not self:
            return True
        if h.root not in self:
            return False
        for m in self:
            up = h.parent.get(m)
            if up is not None and up[0] not in self:
                return False
        return True


@dataclass
class AddState:
    machine: int
    name: str
    attached: Part | None = None


@dataclass
class SubtractState:
    machine: int
    state: int


@dataclass
class ArcModification:
    machine: int
    delta: dict[tuple[int, int], int]
    gamma: dict[tuple[int, int], float]
    start: int


@dataclass
class Composition:
    machine: MealyMachine
    parts: list[Part] = field(default_factory=list)


Modification = Union[AddState, SubtractState, ArcModification, Composition]


def hierarchy_of(part: Part) -> Hierarchy:
    return part if isinstance(part, Hierarchy) else part.hierarchy


def marks_of(part: Part) -> set[int]:
    """Pending marks a part brings along (all machines for a bare hierarchy)."""
    if isinstance(part, Hierarchy):
        return set(part.machines)
    return set(part.table.marks)


def apply(h: Hierarchy, mod: Modification) -> Hierarchy:
    """Apply ``mod`` to ``h`` and return the resulting hierarchy.

    Every operator except composition mutates ``h`` and returns it;
    composition returns a new hierarchy rooted at the composing machine.
    Grafted sub-hierarchies are taken over, not copied.
    """
    if isinstance(mod, Composition):
        return _compose(h, mod)
    if mod.machine not in h.machines:
        raise HierarchyError(f"unknown target machine {mod.machine}")
    m = h.machines[mod.machine]

    if isinstance(mod, AddState):
        sub = hierarchy_of(mod.attached) if mod.attached is not None else None
        if sub is not None and sub.alphabet != h.alphabet:
            raise HierarchyError("attached hierarchy uses a different alphabet")
        if mod.name in m.labels.values():
            raise HierarchyError(f"machine {m.name} already has a state named {mod.name!r}")
        q = new_node_id()
        m.states.append(q)
        m.labels[q] = mod.name
        h.owner[q] = m.id
        if sub is not None:
            h.graft(sub, q)
        return h

    if isinstance(mod, SubtractState):
        q = mod.state
        if h.owner.get(q) != m.id:
            raise HierarchyError(f"node {q} is not a state of machine {m.id}")
        if q == m.start:
            raise HierarchyError("the start state cannot be subtracted")
        c = h.child.pop(q, None)
        if c is not None:
            for k in h.subtree(c):
                for p in h.machines[k].states:
                    h.owner.pop(p, None)
                    h.child.pop(p, None)
                h.parent.pop(k, None)
                del h.machines[k]
        m.states.remove(q)
        m.labels.pop(q, None)
        del h.owner[q]
        for key in [k for k, v in m.delta.items() if k[0] == q or v == q]:
            del m.delta[key]
            del m.gamma[key]
        return h

    if isinstance(mod, ArcModification):
        local = set(m.states)
        if mod.delta.keys() != mod.gamma.keys():
            raise HierarchyError("new delta and gamma must share their domain")
        if mod.start not in local:
            raise HierarchyError("new start state is not a state of the machine")
        for (q, x), v in mod.delta.items():
            if q not in local or v not in local:
                raise HierarchyError(f"transition ({q},{x})->{v} leaves machine {m.id}")
            if not 0 <= x < len(h.alphabet):
                raise HierarchyError(f"unknown input {x}")
        if any(not c >= 0 for c in mod.gamma.values()):
            raise HierarchyError("costs must be nonnegative")
        m.delta = dict(mod.delta)
        m.gamma = {k: float(c) for k, c in mod.gamma.items()}
        m.start = mod.start
        return h

    raise TypeError(f"not a modification: {mod!r}")


def _compose(h: Hierarchy, mod: Composition) -> Hierarchy:
    root = mod.machine
    parts = [hierarchy_of(p) for p in mod.parts]
    if len(parts) > len(root.states):
        raise HierarchyError("more parts than states in the composing machine")
    out = Hierarchy(h.alphabet)
    out.insert(root)
    for q, sub in zip(root.states, parts):
        out.graft(sub, q)
    return out


def init_marks(h: Hierarchy) -> MarkSet:
    return MarkSet(h.machines)


def mark(h: Hierarchy, marks: MarkSet, mod: Modification) -> None:
    """Mark the modified machine and, except for composition, its ancestors.

    Marks of machines deleted by a subtraction are dropped; marks brought in
    by grafted parts are kept as they were.
    """
    if isinstance(mod, Composition):
        keep = set()
        for p in mod.parts:
            keep |= marks_of(p)
        marks.intersection_update(h.machines)
        marks |= keep & h.machines.keys()
        marks.add(mod.machine.id)
        return
    if isinstance(mod, SubtractState):
        marks.intersection_update(h.machines)
    if isinstance(mod, AddState) and mod.attached is not None:
        marks |= marks_of(mod.attached)
    marks.add(mod.machine)
    marks.update(h.ancestors(mod.machine))
