"""JSON model files and modification scripts.

Model document::

    {"alphabet": ["g", "h"],
     "machines": [{"id": "R", "states": ["a", "m"], "start": "a",
                   "transitions": [{"from": "a", "input": "g", "to": "m", "cost": 2}]}],
     "tree": [{"machine": "N", "parent_machine": "R", "parent_state": "m"}]}

Exactly one machine is absent from ``tree`` as a child: the root. Unknown
keys are rejected everywhere.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .core import Hierarchy, HierarchyError, MealyMachine
from .modifications import AddState, ArcModification, Composition, Modification, SubtractState


class ModelFormatError(ValueError):
    pass


_MODEL_KEYS = {"alphabet", "machines", "tree"}
_MACHINE_KEYS = {"id", "states", "start", "transitions"}
_TRANSITION_KEYS = {"from", "input", "to", "cost"}
_TREE_KEYS = {"machine", "parent_machine", "parent_state"}


def _check_keys(obj: Any, allowed: set[str], required: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise ModelFormatError(f"{where}: expected an object")
    extra = obj.keys() - allowed
    if extra:
        raise ModelFormatError(f"{where}: unknown key(s) {sorted(extra)}")
    missing = required - obj.keys()
    if missing:
        raise ModelFormatError(f"{where}: missing key(s) {sorted(missing)}")


def _cost(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelFormatError(f"{where}: cost must be a number")
    if not value >= 0 or value == float("inf"):
        raise ModelFormatError(f"{where}: cost must be finite and nonnegative")
    return float(value)


def _machine(doc: dict, alphabet: list[str], where: str) -> MealyMachine:
    _check_keys(doc, _MACHINE_KEYS, {"id", "states", "start"}, where)
    states = doc["states"]
    if not isinstance(states, list) or not all(isinstance(s, str) for s in states) or not states:
        raise ModelFormatError(f"{where}: states must be a nonempty list of names")
    trans = []
    for i, t in enumerate(doc.get("transitions", [])):
        tw = f"{where}.transitions[{i}]"
        _check_keys(t, _TRANSITION_KEYS, _TRANSITION_KEYS, tw)
        if t["input"] not in alphabet:
            raise ModelFormatError(f"{tw}: unknown input {t['input']!r}")
        trans.append((t["from"], alphabet.index(t["input"]), t["to"], _cost(t["cost"], tw)))
    keys = [(a, x) for a, x, _, _ in trans]
    if len(set(keys)) != len(keys):
        raise ModelFormatError(f"{where}: more than one transition for the same state and input")
    try:
        return MealyMachine.build(states, doc["start"], trans, name=str(doc["id"]))
    except HierarchyError as exc:
        raise ModelFormatError(f"{where}: {exc}") from None


def model_from_dict(doc: dict) -> Hierarchy:
    _check_keys(doc, _MODEL_KEYS, {"alphabet", "machines"}, "model")
    alphabet = doc["alphabet"]
    if not isinstance(alphabet, list) or not all(isinstance(a, str) for a in alphabet):
        raise ModelFormatError("model.alphabet must be a list of names")
    if len(set(alphabet)) != len(alphabet):
        raise ModelFormatError("model.alphabet has duplicates")
    if not isinstance(doc["machines"], list) or not doc["machines"]:
        raise ModelFormatError("model.machines must be a nonempty list")
    built: dict[str, MealyMachine] = {}
    for i, md in enumerate(doc["machines"]):
        m = _machine(md, alphabet, f"model.machines[{i}]")
        if m.name in built:
            raise ModelFormatError(f"duplicate machine id {m.name!r}")
        built[m.name] = m

    links: dict[str, tuple[str, str]] = {}
    for i, t in enumerate(doc.get("tree", [])):
        tw = f"model.tree[{i}]"
        _check_keys(t, _TREE_KEYS, _TREE_KEYS, tw)
        m, pm = str(t["machine"]), str(t["parent_machine"])
        if m not in built or pm not in built:
            raise ModelFormatError(f"{tw}: unknown machine")
        if m in links:
            raise ModelFormatError(f"{tw}: machine {m!r} has two parents")
        if t["parent_state"] not in built[pm].labels.values():
            raise ModelFormatError(f"{tw}: {pm!r} has no state {t['parent_state']!r}")
        links[m] = (pm, t["parent_state"])
    roots = [m for m in built if m not in links]
    if len(roots) != 1:
        raise ModelFormatError(f"tree must leave exactly one root, found {len(roots)}")

    h = Hierarchy(alphabet)
    kids: dict[str, list[str]] = {}
    for m, (pm, _) in links.items():
        kids.setdefault(pm, []).append(m)
    order, stack = [], [roots[0]]
    while stack:
        m = stack.pop()
        order.append(m)
        stack.extend(kids.get(m, []))
    if len(order) != len(built):
        raise ModelFormatError("tree contains a cycle or detached machines")
    try:
        for m in order:
            if m in links:
                pm, ps = links[m]
                h.insert(built[m], built[pm].node(ps))
            else:
                h.insert(built[m])
    except HierarchyError as exc:
        raise ModelFormatError(str(exc)) from None
    return h


def _machine_names(h: Hierarchy) -> dict[int, str]:
    names: dict[int, str] = {}
    counts: dict[str, int] = {}
    for m in h.machines.values():
        counts[m.name] = counts.get(m.name, 0) + 1
    for m in h.machines.values():
        names[m.id] = m.name if counts[m.name] == 1 else f"{m.name}@{m.id}"
    return names


def model_to_dict(h: Hierarchy) -> dict:
    names = _machine_names(h)
    machines, tree = [], []
    for mid in h.subtree(h.root):
        m = h.machines[mid]
        lab = m.labels
        machines.append(
            {
                "id": names[mid],
                "states": [lab[q] for q in m.states],
                "start": lab[m.start],
                "transitions": [
                    {"from": lab[q], "input": h.alphabet[x], "to": lab[v], "cost": m.gamma[(q, x)]}
                    for (q, x), v in sorted(m.delta.items(), key=lambda kv: (m.states.index(kv[0][0]), kv[0][1]))
                ],
            }
        )
        if mid in h.parent:
            pm, pq = h.parent[mid]
            tree.append({"machine": names[mid], "parent_machine": names[pm], "parent_state": h.label(pq)})
    return {"alphabet": list(h.alphabet), "machines": machines, "tree": tree}


def canonical(h: Hierarchy, m: int | None = None):
    """Id-free nested tuple describing a hierarchy, for equality checks."""
    m = h.root if m is None else m
    mm = h.machines[m]
    lab = mm.labels
    trans = tuple(
        sorted((lab[q], h.alphabet[x], lab[v], mm.gamma[(q, x)]) for (q, x), v in mm.delta.items())
    )
    kids = tuple(
        sorted((lab[q], canonical(h, h.child[q])) for q in mm.states if q in h.child)
    )
    return (tuple(sorted(lab[q] for q in mm.states)), lab[mm.start], trans, kids)


def load_model(path: str | Path) -> Hierarchy:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: {exc}") from None
    return model_from_dict(doc)


def save_model(h: Hierarchy, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(h), indent=1) + "\n")


_OPS = {
    "add_state": ({"op", "machine", "state", "attached"}, {"op", "machine", "state"}),
    "subtract_state": ({"op", "machine", "state"}, {"op", "machine", "state"}),
    "arc_modification": ({"op", "machine", "transitions", "start"}, {"op", "machine", "transitions", "start"}),
    "composition": ({"op", "machine", "parts"}, {"op", "machine", "parts"}),
}


def modification_from_dict(h: Hierarchy, rec: dict, where: str = "record") -> Modification:
    """Resolve one script record against the current hierarchy ``h``.

    Records must be resolved one at a time, after the previous ones have been
    applied, because they refer to machines and states by name.
    """
    if not isinstance(rec, dict) or rec.get("op") not in _OPS:
        raise ModelFormatError(f"{where}: op must be one of {sorted(_OPS)}")
    allowed, required = _OPS[rec["op"]]
    _check_keys(rec, allowed, required, where)
    op = rec["op"]
    if op == "composition":
        m = _machine(rec["machine"], h.alphabet, f"{where}.machine")
        if not isinstance(rec["parts"], list):
            raise ModelFormatError(f"{where}.parts must be a list")
        # the string "current" stands for the hierarchy being modified
        parts = [h if p == "current" else model_from_dict(p) for p in rec["parts"]]
        for p in parts:
            if p.alphabet != h.alphabet:
                raise ModelFormatError(f"{where}: part alphabet differs")
        return Composition(m, parts)
    try:
        mid = h.machine_by_name(str(rec["machine"]))
    except KeyError as exc:
        raise ModelFormatError(f"{where}: {exc.args[0]}") from None
    mm = h.machines[mid]

    def node(name: str) -> int:
        try:
            return mm.node(name)
        except KeyError:
            raise ModelFormatError(f"{where}: machine {mm.name!r} has no state {name!r}") from None

    if op == "add_state":
        att = rec.get("attached")
        sub = model_from_dict(att) if att is not None else None
        if sub is not None and sub.alphabet != h.alphabet:
            raise ModelFormatError(f"{where}: attached alphabet differs")
        return AddState(mid, str(rec["state"]), sub)
    if op == "subtract_state":
        return SubtractState(mid, node(rec["state"]))
    delta, gamma = {}, {}
    for i, t in enumerate(rec["transitions"]):
        tw = f"{where}.transitions[{i}]"
        _check_keys(t, _TRANSITION_KEYS, _TRANSITION_KEYS, tw)
        if t["input"] not in h.alphabet:
            raise ModelFormatError(f"{tw}: unknown input {t['input']!r}")
        key = (node(t["from"]), h.alphabet.index(t["input"]))
        delta[key] = node(t["to"])
        gamma[key] = _cost(t["cost"], tw)
    return ArcModification(mid, delta, gamma, node(rec["start"]))


def load_script(path: str | Path) -> list[dict]:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: {exc}") from None
    if not isinstance(doc, list):
        raise ModelFormatError(f"{path}: a script is a list of records")
    return doc
