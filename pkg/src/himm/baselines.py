"""Flat comparison planners: plain Dijkstra and Contraction Hierarchies.

Both work on the explicit graph obtained by applying the hierarchical
transition function to every flat state and input.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable

from .core import INF, Hierarchy, step


@dataclass
class FlatGraph:
    vertices: list[int]
    edges: list[tuple[int, int, int, float]]
    out: dict[int, list[tuple[int, int, float]]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.out:
            self.out = {v: [] for v in self.vertices}
            for u, x, v, c in self.edges:
                self.out[u].append((x, v, c))

    def export(self, names: list[str] | None = None) -> str:
        lab = (lambda x: names[x]) if names else str
        return "".join(f"{u} {lab(x)} {v} {c!r}\n" for u, x, v, c in self.edges)


def flatten(h: Hierarchy) -> FlatGraph:
    vertices = sorted(h.flat_states())
    edges = []
    for q in vertices:
        for x in range(len(h.alphabet)):
            r = step(h, q, x)
            if r is not None:
                edges.append((q, x, r[0], r[1]))
    return FlatGraph(vertices, edges)


def graph_from_edges(vertices: Iterable[int], edges: Iterable[tuple[int, int, int, float]]) -> FlatGraph:
    return FlatGraph(list(vertices), list(edges))


def dijkstra_flat(g: FlatGraph, source: int, target: int) -> tuple[float, list[int]]:
    """Cheapest input sequence from ``source`` to ``target``; ``(INF, [])`` if none."""
    if source == target:
        return 0.0, []
    out = g.out
    dist = {source: 0.0}
    pred: dict[int, tuple[int, int]] = {}
    done: set[int] = set()
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        if u == target:
            plan = []
            while u in pred:
                u, x = pred[u]
                plan.append(x)
            plan.reverse()
            return d, plan
        done.add(u)
        for x, v, c in out[u]:
            nd = d + c
            if nd < dist.get(v, INF):
                dist[v] = nd
                pred[v] = (u, x)
                heapq.heappush(heap, (nd, v))
    return INF, []


def dijkstra_all(g: FlatGraph, source: int) -> dict[int, float]:
    """Single-source distances to every reachable vertex."""
    out = g.out
    dist = {source: 0.0}
    done: set[int] = set()
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for _, v, c in out[u]:
            nd = d + c
            if nd < dist.get(v, INF):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


@dataclass
class CHIndex:
    """Contraction hierarchy over a flat graph.

    Vertices are renumbered ``0..n-1`` (``index``/``vertices``). ``up[v]``
    holds edges to higher-ranked vertices, ``down[v]`` holds edges *into* v
    from higher-ranked vertices. An edge ``(u, w)`` is either original, with
    its input in ``label``, or a shortcut through ``middle[(u, w)]``.
    """

    vertices: list[int]
    index: dict[int, int]
    rank: list[int]
    up: list[list[tuple[int, float]]]
    down: list[list[tuple[int, float]]]
    label: dict[tuple[int, int], int]
    middle: dict[tuple[int, int], int]
    cost: dict[tuple[int, int], float]

    @property
    def shortcuts(self) -> int:
        return len(self.middle)

    def unpack(self, u: int, w: int) -> list[int]:
        out: list[int] = []
        stack = [(u, w)]
        while stack:
            a, b = stack.pop()
            v = self.middle.get((a, b))
            if v is None:
                out.append(self.label[(a, b)])
            else:
                stack.append((v, b))
                stack.append((a, v))
        return out


def _witness(out, start, skip, limit, bound, targets):
    """Distances from ``start`` avoiding ``skip``; settles at most ``limit`` nodes."""
    dist = {start: 0.0}
    heap = [(0.0, start)]
    settled = 0
    remaining = len(targets)
    done = set()
    while heap and settled < limit:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        if d > bound:
            break
        done.add(u)
        settled += 1
        if u in targets:
            remaining -= 1
            if remaining == 0:
                break
        for v, c in out[u].items():
            if v == skip:
                continue
            nd = d + c
            if nd < dist.get(v, INF):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def ch_preprocess(g: FlatGraph, witness_limit: int = 20) -> CHIndex:
    """Contract all vertices in lazily re-checked edge-difference order.

    Priority is the edge difference (shortcuts added minus edges removed)
    plus the number of already contracted neighbours. Witness searches settle
    at most ``witness_limit`` nodes, which can only add superfluous shortcuts.
    """
    vertices = list(g.vertices)
    index = {v: i for i, v in enumerate(vertices)}
    n = len(vertices)
    out: list[dict[int, float]] = [dict() for _ in range(n)]
    inn: list[dict[int, float]] = [dict() for _ in range(n)]
    label: dict[tuple[int, int], int] = {}
    cost: dict[tuple[int, int], float] = {}
    for u0, x, v0, c in g.edges:
        u, v = index[u0], index[v0]
        if u == v:
            continue
        if c < out[u].get(v, INF):
            out[u][v] = c
            inn[v][u] = c
            label[(u, v)] = x
            cost[(u, v)] = c
    middle: dict[tuple[int, int], int] = {}
    contracted_nbrs = [0] * n
    rank = [0] * n
    up: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    down: list[list[tuple[int, float]]] = [[] for _ in range(n)]

    def shortcuts_for(v: int) -> list[tuple[int, int, float]]:
        found = []
        outs = out[v]
        for u, cu in inn[v].items():
            targets = {w: cu + cw for w, cw in outs.items() if w != u}
            if not targets:
                continue
            dist = _witness(out, u, v, witness_limit, max(targets.values()), targets)
            for w, d in targets.items():
                if dist.get(w, INF) > d:
                    found.append((u, w, d))
        return found

    def priority(v: int, sc: list) -> int:
        return len(sc) - len(out[v]) - len(inn[v]) + contracted_nbrs[v]

    heap = [(priority(v, shortcuts_for(v)), v) for v in range(n)]
    heapq.heapify(heap)
    order = 0
    while heap:
        _, v = heapq.heappop(heap)
        sc = shortcuts_for(v)
        p = priority(v, sc)
        if heap and p > heap[0][0]:
            heapq.heappush(heap, (p, v))
            continue
        for u, w, d in sc:
            if d < out[u].get(w, INF):
                out[u][w] = d
                inn[w][u] = d
                middle[(u, w)] = v
                cost[(u, w)] = d
                label.pop((u, w), None)
        rank[v] = order
        order += 1
        up[v] = list(out[v].items())
        down[v] = list(inn[v].items())
        for w in out[v]:
            del inn[w][v]
            contracted_nbrs[w] += 1
        for u in inn[v]:
            del out[u][v]
            contracted_nbrs[u] += 1
        out[v] = {}
        inn[v] = {}
    return CHIndex(vertices, index, rank, up, down, label, middle, cost)


def ch_query(idx: CHIndex, source: int, target: int) -> tuple[float, list[int]]:
    """Bidirectional upward search; returns cost and the unpacked input plan."""
    if source == target:
        return 0.0, []
    s, t = idx.index[source], idx.index[target]
    dist = ({s: 0.0}, {t: 0.0})
    pred: tuple[dict[int, int], dict[int, int]] = ({}, {})
    done: tuple[set[int], set[int]] = (set(), set())
    heaps = ([(0.0, s)], [(0.0, t)])
    adj = (idx.up, idx.down)
    best, meet = INF, -1
    while heaps[0] or heaps[1]:
        top0 = heaps[0][0][0] if heaps[0] else INF
        top1 = heaps[1][0][0] if heaps[1] else INF
        if min(top0, top1) >= best:
            break
        side = 0 if top0 <= top1 else 1
        d, u = heapq.heappop(heaps[side])
        if u in done[side]:
            continue
        done[side].add(u)
        other = dist[1 - side].get(u)
        if other is not None and d + other < best:
            best, meet = d + other, u
        for v, c in adj[side][u]:
            nd = d + c
            if nd < dist[side].get(v, INF):
                dist[side][v] = nd
                pred[side][v] = u
                heapq.heappush(heaps[side], (nd, v))
    if best == INF:
        return INF, []
    fwd = [meet]
    while fwd[-1] in pred[0]:
        fwd.append(pred[0][fwd[-1]])
    fwd.reverse()
    bwd = [meet]
    while bwd[-1] in pred[1]:
        bwd.append(pred[1][bwd[-1]])
    path = fwd + bwd[1:]
    plan: list[int] = []
    for a, b in zip(path, path[1:]):
        plan.extend(idx.unpack(a, b))
    return best, plan
