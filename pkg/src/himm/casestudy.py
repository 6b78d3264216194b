"""The three-layer robot lab hierarchy and the modifications of studies 2 and 3."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from .core import Hierarchy, MealyMachine
from .modifications import AddState, ArcModification, Modification, SubtractState

DIRS = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}


@lru_cache(maxsize=None)
def layout() -> dict:
    return json.loads(resources.files("himm.data").joinpath("robot_lab.json").read_text())


def _cell(r: int, c: int) -> str:
    return f"r{r}c{c}"


def _arm(i: int, j: int, scanned: tuple[int, int] | None) -> str:
    return f"a{i}{j}" + ("" if scanned is None else f"s{scanned[0]}{scanned[1]}")


def desk_machine(cfg: dict, name: str) -> MealyMachine:
    sym = cfg["alphabet"].index
    n, cost = cfg["rack"], cfg["desk_cost"]
    mems = [None] + [(i, j) for i in range(1, n + 1) for j in range(1, n + 1)]
    states = ["S"] + [_arm(i, j, s) for s in mems for i in range(1, n + 1) for j in range(1, n + 1)]
    trans = [("S", sym("arm"), _arm(1, 1, None), cost)]
    for s in mems:
        trans.append((_arm(1, 1, s), sym("back"), "S", cost))
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                here = _arm(i, j, s)
                for d, (di, dj) in DIRS.items():
                    ti, tj = i + di, j + dj
                    dest = _arm(ti, tj, s) if 1 <= ti <= n and 1 <= tj <= n else here
                    trans.append((here, sym(d), dest, cost))
                if s is None:
                    trans.append((here, sym("scan"), _arm(i, j, (i, j)), cfg["scan_cost"]))
    return MealyMachine.build(states, "S", trans, name=name)


def house_machine(cfg: dict, name: str) -> MealyMachine:
    sym = cfg["alphabet"].index
    n, cost = cfg["grid"], cfg["move_cost"]
    er, ec = cfg["entrance_cell"]
    states = ["S"] + [_cell(r, c) for r in range(1, n + 1) for c in range(1, n + 1)]
    trans = [("S", sym("up"), _cell(er, ec), cost), ("S", sym("down"), "S", cost)]
    for r in range(1, n + 1):
        for c in range(1, n + 1):
            here = _cell(r, c)
            for d, (dr, dc) in DIRS.items():
                tr, tc = r + dr, c + dc
                if 1 <= tr <= n and 1 <= tc <= n:
                    dest = _cell(tr, tc)
                elif (r, c) == (er, ec) and d == "down":
                    dest = "S"
                else:
                    dest = here
                trans.append((here, sym(d), dest, cost))
    return MealyMachine.build(states, "S", trans, name=name)


def build_house(cfg: dict, k: int) -> Hierarchy:
    """One house: the location grid with a desk machine under every location."""
    h = Hierarchy(cfg["alphabet"])
    m2 = house_machine(cfg, f"house{k}")
    h.insert(m2)
    for q in m2.states:
        h.insert(desk_machine(cfg, f"house{k}/{m2.labels[q]}"), q)
    return h


def lab_machine(cfg: dict, houses: int) -> MealyMachine:
    sym = cfg["alphabet"].index
    names = [f"H{k}" for k in range(1, houses + 1)]
    trans = []
    for a, b in zip(names, names[1:]):
        trans.append((a, sym("right"), b, cfg["house_cost"]))
        trans.append((b, sym("left"), a, cfg["house_cost"]))
    return MealyMachine.build(names, "H1", trans, name="lab")


def build_case_study(cfg: dict | None = None) -> Hierarchy:
    cfg = cfg or layout()
    h = Hierarchy(cfg["alphabet"])
    root = lab_machine(cfg, cfg["houses"])
    h.insert(root)
    for k, q in enumerate(root.states, start=1):
        h.graft(build_house(cfg, k), q)
    return h


def house_node(h: Hierarchy, k: int) -> int:
    return h.root_machine.node(f"H{k}")


def desk_state(h: Hierarchy, house: int, cell, arm, scanned) -> int:
    """Flat state for a desk configuration at ``cell`` of ``house``."""
    m2 = h.machines[h.child[house_node(h, house)]]
    loc = m2.node(_cell(*cell))
    m3 = h.machines[h.child[loc]]
    return m3.node(_arm(*arm, None if scanned is None else tuple(scanned)))


def endpoints(h: Hierarchy, study: int, cfg: dict | None = None) -> tuple[int, int]:
    cfg = cfg or layout()
    s, g = cfg["start"], cfg["goal"]
    src = desk_state(h, s["house"], s["cell"], s["arm"], s["scanned"])
    dst = desk_state(h, cfg["goal_house"][str(study)], g["cell"], g["arm"], g["scanned"])
    return src, dst


def study_modifications(h: Hierarchy, study: int, cfg: dict | None = None) -> list[Modification]:
    """Modifications turning the study-1 model into the given study's model.

    Study 3's records refer to node ids of ``h``; apply them to that same
    hierarchy. Study 2's arc modification refers to the new house node, so it
    is produced lazily: call this, apply the first record, then call
    :func:`connect_new_house`.
    """
    cfg = cfg or layout()
    if study == 1:
        return []
    if study == 2:
        k = cfg["study2_new_house"]
        return [AddState(h.root, f"H{k}", build_house(cfg, k))]
    if study == 3:
        k = cfg["study3_house"]
        m2 = h.machines[h.child[house_node(h, k)]]
        return [SubtractState(m2.id, m2.node(_cell(r, c))) for r, c in cfg["study3_blocked"]]
    raise ValueError(f"unknown study {study}")


def connect_new_house(h: Hierarchy, cfg: dict | None = None) -> ArcModification:
    cfg = cfg or layout()
    root = h.root_machine
    k = cfg["study2_new_house"]
    a, b = root.node(f"H{k - 1}"), root.node(f"H{k}")
    right, left = cfg["alphabet"].index("right"), cfg["alphabet"].index("left")
    delta = dict(root.delta)
    gamma = dict(root.gamma)
    delta[(a, right)], gamma[(a, right)] = b, cfg["house_cost"]
    delta[(b, left)], gamma[(b, left)] = a, cfg["house_cost"]
    return ArcModification(root.id, delta, gamma, root.start)
