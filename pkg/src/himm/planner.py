"""Query step: plan between two flat states using precomputed exit costs.

Only the machines on the ancestor chains of the source and the goal are
opened up. Every other subtree hanging off those machines is collapsed into a
single node whose exit-cost row prices leaving it, so the search graph has
at most a few machines' worth of nodes regardless of the hierarchy's size.
The reduced path is expanded back into primitive inputs with the stored exit
trajectories, either all at once or one input at a time.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterator

from .core import INF, Hierarchy, HierarchyError
from .exits import ExitTable, expand_exit_trajectory

Step = tuple[int, int]


@dataclass
class ReducedModel:
    """Search graph for one query.

    ``edges[node][y]`` is ``(target, weight)`` or ``None``. Nodes are flat
    states of path machines and collapsed nodes (non-flat states whose child
    machine is off the path).
    """

    source: int
    goal: int
    path_machines: set[int]
    collapsed: set[int]
    edges: dict[int, list[tuple[int, float] | None]]

    @property
    def nodes(self) -> list[int]:
        return list(self.edges)


@dataclass
class Plan:
    source: int
    goal: int
    cost: float
    reduced: list[Step]
    inputs: list[int] | None = None
    _table: ExitTable | None = field(default=None, repr=False)
    _h: Hierarchy | None = field(default=None, repr=False)

    @property
    def found(self) -> bool:
        return self.cost < INF

    def cursor(self) -> "PlanCursor":
        if self._h is None or self._table is None:
            raise ValueError("plan is detached from its hierarchy")
        return PlanCursor(self._h, self._table, self.reduced)

    def names(self) -> list[str]:
        assert self._h is not None and self.inputs is not None
        return [self._h.alphabet[x] for x in self.inputs]


def _landing(h: Hierarchy, path: set[int], v: int) -> int:
    child, machines = h.child, h.machines
    while True:
        c = child.get(v)
        if c is None or c not in path:
            return v
        v = machines[c].start


def reduce(h: Hierarchy, table: ExitTable, s_init: int, s_goal: int) -> ReducedModel:
    table.require_valid()
    for s in (s_init, s_goal):
        if s not in h.owner:
            raise HierarchyError(f"unknown node {s}")
        if not h.is_flat(s):
            raise HierarchyError(f"node {s} is not a flat state")
    path = set(h.chain(s_init)) | set(h.chain(s_goal))
    machines, child, parent = h.machines, h.child, h.parent
    nsym = len(h.alphabet)

    # boundary[m][y]: where input y goes when it bubbles out of machine m
    boundary: dict[int, list[tuple[int, float] | None]] = {}

    def bubble(m: int) -> list[tuple[int, float] | None]:
        row = boundary.get(m)
        if row is not None:
            return row
        up = parent.get(m)
        if up is None:
            row = [None] * nsym
        else:
            w_m, w = up
            mm = machines[w_m]
            row = []
            above = None
            for y in range(nsym):
                v = mm.delta.get((w, y))
                if v is not None:
                    row.append((_landing(h, path, v), mm.gamma[(w, y)]))
                else:
                    if above is None:
                        above = bubble(w_m)
                    row.append(above[y])
        boundary[m] = row
        return row

    collapsed: set[int] = set()
    edges: dict[int, list[tuple[int, float] | None]] = {}
    for m in path:
        mm = machines[m]
        delta, gamma = mm.delta, mm.gamma
        for q in mm.states:
            c = child.get(q)
            if c is not None and c in path:
                continue
            exit_row = None
            if c is not None:
                collapsed.add(q)
                exit_row = table.entries[c].costs
            out: list[tuple[int, float] | None] = []
            for y in range(nsym):
                extra = 0.0 if exit_row is None else exit_row[y]
                if extra == INF:
                    out.append(None)
                    continue
                v = delta.get((q, y))
                if v is not None:
                    out.append((_landing(h, path, v), extra + gamma[(q, y)]))
                else:
                    b = bubble(m)[y]
                    out.append(None if b is None else (b[0], extra + b[1]))
            edges[q] = out
    return ReducedModel(s_init, s_goal, path, collapsed, edges)


def solve_reduced(r: ReducedModel) -> tuple[float, list[Step]]:
    """Dijkstra from source to goal over the reduced graph.

    Returns ``(cost, steps)``; an unreachable goal gives ``(INF, [])``.
    """
    if r.source == r.goal:
        return 0.0, []
    dist = {r.source: 0.0}
    pred: dict[int, Step] = {}
    done: set[int] = set()
    heap = [(0.0, r.source)]
    edges = r.edges
    while heap:
        d, q = heapq.heappop(heap)
        if q in done:
            continue
        if q == r.goal:
            steps = []
            while q in pred:
                q, y = pred[q]
                steps.append((q, y))
            steps.reverse()
            return d, steps
        done.add(q)
        for y, e in enumerate(edges[q]):
            if e is None:
                continue
            v, w = e
            nd = d + w
            if nd < dist.get(v, INF):
                dist[v] = nd
                pred[v] = (q, y)
                heapq.heappush(heap, (nd, v))
    return INF, []


def expand(h: Hierarchy, table: ExitTable, reduced: list[Step]) -> list[int]:
    """Replace each step at a collapsed node by the child's exit inputs."""
    out: list[int] = []
    for q, y in reduced:
        c = h.child.get(q)
        if c is None:
            out.append(y)
        else:
            out.extend(expand_exit_trajectory(h, table, c, y))
    return out


class PlanCursor:
    """Streams a plan's primitive inputs one at a time.

    Holds one frame per tree level being expanded; ``frames_pushed`` reports
    how many frames the last :meth:`next_input` call had to open.
    """

    def __init__(self, h: Hierarchy, table: ExitTable, reduced: list[Step]):
        self._h = h
        self._table = table
        self._stack: list[tuple[tuple[Step, ...] | list[Step], int]] = [(reduced, 0)]
        self.frames_pushed = 0
        self.max_height = 1

    def next_input(self) -> int | None:
        stack, child, entries = self._stack, self._h.child, self._table.entries
        self.frames_pushed = 0
        while stack:
            steps, i = stack[-1]
            if i == len(steps):
                stack.pop()
                continue
            q, y = steps[i]
            stack[-1] = (steps, i + 1)
            c = child.get(q)
            if c is None:
                return y
            traj = entries[c].trajs[y]
            if traj is None:
                raise ValueError(f"machine {c} cannot be exited with input {y}")
            stack.append((traj, 0))
            self.frames_pushed += 1
            self.max_height = max(self.max_height, len(stack))
        return None

    def __iter__(self) -> Iterator[int]:
        while True:
            x = self.next_input()
            if x is None:
                return
            yield x


def next_input(cursor: PlanCursor) -> int | None:
    return cursor.next_input()


def plan(h: Hierarchy, table: ExitTable, s_init: int, s_goal: int, *, lazy: bool = False) -> Plan:
    """Optimal plan from ``s_init`` to ``s_goal``.

    With ``lazy=True`` the primitive inputs are not materialised; stream them
    with :meth:`Plan.cursor` instead.
    """
    r = reduce(h, table, s_init, s_goal)
    cost, steps = solve_reduced(r)
    inputs = None if lazy or cost == INF else expand(h, table, steps)
    if cost == INF:
        inputs = []
    return Plan(s_init, s_goal, cost, steps, inputs, table, h)
