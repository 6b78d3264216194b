"""Random hierarchies, flat graphs and modifications for testing and sweeps."""

from __future__ import annotations

import random

from .core import Hierarchy, MealyMachine
from .modifications import AddState, ArcModification, Composition, Modification, SubtractState

ALPHABET = ["a", "b", "c", "d"]


def _random_machine(rng: random.Random, nsym: int, nstates: int, density: float, name: str) -> MealyMachine:
    names = [f"{name}.{i}" for i in range(nstates)]
    trans = []
    for s in names:
        for x in range(nsym):
            if rng.random() < density:
                cost = rng.choice([0, 0.5, 1, 2, 3, 5, rng.randint(0, 9)])
                trans.append((s, x, rng.choice(names), cost))
    return MealyMachine.build(names, rng.choice(names), trans, name=name)


def random_hierarchy(
    rng: random.Random,
    max_depth: int = 4,
    max_states: int = 5,
    nsym: int | None = None,
    density: float | None = None,
    refine: float = 0.45,
) -> Hierarchy:
    """A random hierarchy with at most ``max_depth`` machine levels.

    Each state refines into a child machine with probability ``refine``
    (never below the last level).
    """
    nsym = nsym or rng.randint(1, len(ALPHABET))
    density = rng.uniform(0.2, 0.8) if density is None else density
    h = Hierarchy(ALPHABET[:nsym])
    counter = iter(range(10**9))
    root = _random_machine(rng, nsym, rng.randint(1, max_states), density, f"m{next(counter)}")
    h.insert(root)
    frontier = [(root, 1)]
    while frontier:
        m, d = frontier.pop()
        if d >= max_depth:
            continue
        for q in m.states:
            if rng.random() < refine:
                c = _random_machine(rng, nsym, rng.randint(1, max_states), density, f"m{next(counter)}")
                h.insert(c, q)
                frontier.append((c, d + 1))
    return h


def random_graph_edges(
    rng: random.Random, n: int, m: int, nsym: int = 3
) -> tuple[list[int], list[tuple[int, int, int, float]]]:
    """Random deterministic graph: at most one edge per (vertex, input), so
    an input sequence from a vertex has a single meaning, as in a flattened
    machine. Duplicate draws are dropped, so fewer than ``m`` edges may come back.
    """
    vertices = list(range(n))
    edges = {}
    for _ in range(m):
        u, x, v = rng.randrange(n), rng.randrange(nsym), rng.randrange(n)
        c = float(rng.choice([0, 1, 2, 3, 5, 8, rng.randint(0, 20)]))
        edges.setdefault((u, x), (u, x, v, c))
    return vertices, list(edges.values())


def random_modification(rng: random.Random, h: Hierarchy, attach=None, current=None) -> Modification:
    """A well-formed random modification of ``h``.

    ``attach`` builds the sub-hierarchy used by state additions and
    compositions; by default a small fresh random hierarchy. Compositions put
    ``current`` (default ``h``) under the first state of the new root.
    """
    nsym = len(h.alphabet)
    if attach is None:
        def attach():
            return random_hierarchy(rng, max_depth=2, max_states=3, nsym=nsym)

    kind = rng.choice(["add", "add_sub", "subtract", "arc", "arc", "compose"])
    mid = rng.choice(sorted(h.machines))
    m = h.machines[mid]
    if kind == "subtract":
        cands = [q for q in m.states if q != m.start]
        if cands:
            return SubtractState(mid, rng.choice(cands))
        kind = "arc"
    if kind in ("add", "add_sub"):
        name = f"n{rng.randrange(10**9)}"
        return AddState(mid, name, attach() if kind == "add_sub" else None)
    if kind == "arc":
        delta, gamma = {}, {}
        for q in m.states:
            for x in range(nsym):
                if rng.random() < 0.5:
                    delta[(q, x)] = rng.choice(m.states)
                    gamma[(q, x)] = float(rng.randint(0, 6))
        return ArcModification(mid, delta, gamma, rng.choice(m.states))
    new = _random_machine(rng, nsym, rng.randint(1, 4), 0.5, f"c{rng.randrange(10**9)}")
    parts = [h if current is None else current]
    parts += [attach() for _ in range(rng.randint(0, len(new.states) - 1))]
    return Composition(new, parts)
