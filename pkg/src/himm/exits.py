"""Optimal exit costs per machine, computed and maintained incrementally.

For a machine M and input x, the optimal exit cost is the cheapest internal
cost of leaving M's subtree with final input x, starting from M's resolved
start state. It is found by Dijkstra on an augmented copy of M in which every
unsupported input leads to a virtual sink ``E_x`` and every edge out of a
non-flat state is surcharged with that state's own exit cost.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable

from .core import INF, Hierarchy, HierarchyError
from .modifications import (
    AddState,
    Composition,
    MarkSet,
    Modification,
    SubtractState,
    apply,
    hierarchy_of,
    init_marks,
    mark,
)

Step = tuple[int, int]
EXIT = -1  # target marker for the virtual exit states


class StaleTableError(RuntimeError):
    """Raised when exit costs are read while machines are still marked."""


@dataclass
class AugmentedMachine:
    """Augmented copy of one machine.

    ``edges[q][y]`` is ``(target, weight)``; target ``EXIT`` stands for
    ``E_y``. Edges with infinite weight are left out (``None``).
    """

    base: int
    start: int
    states: list[int]
    nsym: int
    edges: dict[int, list[tuple[int, float] | None]]

    def replay(self, traj: Iterable[Step]) -> tuple[int, float]:
        """Walk ``traj`` from the start; return the final target and total weight."""
        q, total = self.start, 0.0
        for p, y in traj:
            if p != q:
                raise ValueError(f"trajectory expects state {p}, machine is at {q}")
            e = self.edges[p][y]
            if e is None:
                return EXIT, INF
            q, w = e
            total += w
        return q, total


@dataclass
class ExitEntry:
    costs: list[float]
    trajs: list[tuple[Step, ...] | None]


@dataclass
class ExitTable:
    """Exit costs and augmented exit trajectories for every computed machine.

    A machine's entry is valid iff the machine is not in ``marks``.
    ``recomputed`` lists the machines refreshed by the most recent update.
    """

    entries: dict[int, ExitEntry] = field(default_factory=dict)
    marks: MarkSet = field(default_factory=MarkSet)
    recomputed: list[int] = field(default_factory=list)

    def valid(self, m: int) -> bool:
        return m in self.entries and m not in self.marks

    def costs(self, m: int) -> list[float]:
        return self.entries[m].costs

    def require_valid(self) -> None:
        if self.marks:
            raise StaleTableError(
                f"exit table is stale: {len(self.marks)} machine(s) marked; update before planning"
            )

    def dump(self, h: Hierarchy) -> str:
        lines = []
        for m in sorted(self.entries):
            for x, c in enumerate(self.entries[m].costs):
                lines.append(f"{m} {h.alphabet[x]} {'inf' if c == INF else repr(c)}")
        return "\n".join(lines) + ("\n" if lines else "")


def _exit_row(h: Hierarchy, table: ExitTable, q: int, nsym: int) -> list[float] | None:
    c = h.child.get(q)
    if c is None:
        return None
    entry = table.entries.get(c)
    if entry is None or c in table.marks:
        raise StaleTableError(f"child machine {c} has no valid exit costs")
    return entry.costs


def build_augmented(h: Hierarchy, m: int, table: ExitTable) -> AugmentedMachine:
    mm = h.machines[m]
    nsym = len(h.alphabet)
    delta, gamma = mm.delta, mm.gamma
    edges: dict[int, list[tuple[int, float] | None]] = {}
    for q in mm.states:
        row = _exit_row(h, table, q, nsym)
        out: list[tuple[int, float] | None] = []
        for y in range(nsym):
            extra = 0.0 if row is None else row[y]
            if extra == INF:
                out.append(None)
                continue
            v = delta.get((q, y))
            if v is None:
                out.append((EXIT, extra))
            else:
                out.append((v, extra + gamma[(q, y)]))
        edges[q] = out
    return AugmentedMachine(m, mm.start, list(mm.states), nsym, edges)


def dijkstra_exits(aug: AugmentedMachine) -> tuple[list[float], list[tuple[Step, ...] | None]]:
    """Cheapest path from the start to every exit sink.

    Ties go to the first path found; the heap orders equal distances by node
    id and inputs are scanned in id order, so results are deterministic.
    """
    nsym = aug.nsym
    dist = {aug.start: 0.0}
    pred: dict[int, Step] = {}
    done: set[int] = set()
    costs = [INF] * nsym
    last: list[int | None] = [None] * nsym
    heap = [(0.0, aug.start)]
    edges = aug.edges
    while heap:
        d, q = heapq.heappop(heap)
        if q in done:
            continue
        done.add(q)
        for y, e in enumerate(edges[q]):
            if e is None:
                continue
            v, w = e
            nd = d + w
            if v == EXIT:
                if nd < costs[y]:
                    costs[y] = nd
                    last[y] = q
            elif v not in done and nd < dist.get(v, INF):
                dist[v] = nd
                pred[v] = (q, y)
                heapq.heappush(heap, (nd, v))

    trajs: list[tuple[Step, ...] | None] = []
    for y in range(nsym):
        q = last[y]
        if q is None:
            trajs.append(None)
            continue
        path = [(q, y)]
        while q in pred:
            q, x = pred[q]
            path.append((q, x))
        path.reverse()
        trajs.append(tuple(path))
    return costs, trajs


def compute_optimal_exits(h: Hierarchy, marks: MarkSet, table: ExitTable) -> ExitTable:
    """Recompute every marked machine, children before parents, and unmark it.

    Unmarked machines are served from the table. Relies on the marks forming a
    root-containing subtree so that a walk from the root reaches all of them.
    """
    table.recomputed = []
    if h.root is None or h.root not in marks:
        if marks:
            raise HierarchyError("marked machines do not contain the root")
        return table
    child = h.child
    # post-order over the marked part of the tree, iteratively
    stack: list[tuple[int, bool]] = [(h.root, False)]
    while stack:
        m, ready = stack.pop()
        if ready:
            aug = build_augmented(h, m, table)
            costs, trajs = dijkstra_exits(aug)
            table.entries[m] = ExitEntry(costs, trajs)
            marks.discard(m)
            table.recomputed.append(m)
            continue
        stack.append((m, True))
        for q in h.machines[m].states:
            c = child.get(q)
            if c is not None and c in marks:
                stack.append((c, False))
    if marks:
        raise HierarchyError(f"{len(marks)} marked machine(s) unreachable from the root")
    return table


def expand_exit_trajectory(h: Hierarchy, table: ExitTable, m: int, x: int) -> list[int]:
    """Primitive inputs of an optimal (m, x)-exit trajectory, final ``x`` included.

    Started at ``resolve_start(h, m)``, the inputs stay inside ``m``'s subtree
    and the last one leaves it; the cost of all but the last step equals the
    table's exit cost.
    """
    entry = table.entries[m]
    traj = entry.trajs[x]
    if traj is None:
        raise ValueError(f"machine {m} cannot be exited with input {h.alphabet[x]!r}")
    out: list[int] = []
    for q, y in traj:
        c = h.child.get(q)
        if c is None:
            out.append(y)
        else:
            out.extend(expand_exit_trajectory(h, table, c, y))
    return out


class ExitComputer:
    """A hierarchy together with its exit table, kept current under modifications.

    Modifications are applied and marked one by one; :meth:`update` then
    recomputes only the marked machines.
    """

    def __init__(self, h: Hierarchy):
        self.hierarchy = h
        self.table = ExitTable(marks=init_marks(h))

    @property
    def marks(self) -> MarkSet:
        return self.table.marks

    def modify(self, mod: Modification) -> None:
        h = self.hierarchy
        parts = []
        if isinstance(mod, AddState) and mod.attached is not None:
            parts = [mod.attached]
        elif isinstance(mod, Composition):
            parts = list(mod.parts)
        inherited = {}
        for p in parts:
            if not isinstance(p, Hierarchy):
                inherited.update(p.table.entries)
        dropped: list[int] = []
        if isinstance(mod, SubtractState):
            c = h.child.get(mod.state)
            if c is not None and h.owner.get(mod.state) == mod.machine:
                dropped = h.subtree(c)

        new = apply(h, mod)
        if isinstance(mod, Composition):
            keep = {m for p in parts for m in hierarchy_of(p).machines}
            self.table.entries = {m: e for m, e in self.table.entries.items() if m in keep}
        for m in dropped:
            self.table.entries.pop(m, None)
        self.table.entries.update(inherited)
        self.hierarchy = new
        mark(new, self.table.marks, mod)

    def update(self) -> int:
        """Recompute marked machines; return how many were recomputed."""
        compute_optimal_exits(self.hierarchy, self.table.marks, self.table)
        return len(self.table.recomputed)

    def recompute_all(self) -> int:
        self.table.marks = init_marks(self.hierarchy)
        return self.update()
