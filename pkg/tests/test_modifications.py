import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from himm.baselines import flatten
from himm.core import Hierarchy, HierarchyError, MealyMachine, validate
from himm.exits import ExitComputer
from himm.generators import random_hierarchy, random_modification
from himm.io import canonical
from himm.modifications import (
    AddState,
    ArcModification,
    Composition,
    MarkSet,
    SubtractState,
    apply,
    init_marks,
    mark,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def names(h, m):
    return {h.label(q) for q in h.machines[m].states}


def test_add_state_terminal(toy2):
    r = toy2.root
    apply(toy2, AddState(r, "p"))
    assert names(toy2, r) == {"a", "m", "p"}
    p = toy2.find("p")
    assert toy2.is_flat(p)
    assert all(p not in (q, v) for (q, _), v in toy2.root_machine.delta.items())
    assert validate(toy2) == []


def test_add_state_with_attached(toy2, fig3):
    fig3.alphabet = list(toy2.alphabet)
    apply(toy2, AddState(toy2.root, "sub", fig3))
    assert validate(toy2) == []
    assert len(toy2.machines) == 6
    assert toy2.child[toy2.find("sub")] == fig3.root


def test_add_state_alphabet_mismatch(toy2):
    other = Hierarchy(["z"])
    other.add_machine(["s"], "s")
    with pytest.raises(HierarchyError):
        apply(toy2, AddState(toy2.root, "p", other))


def test_subtract_non_flat_drops_subtree(toy2):
    apply(toy2, SubtractState(toy2.root, toy2.find("m")))
    assert len(toy2.machines) == 1
    assert list(toy2.flat_states()) == [toy2.find("a")]
    assert toy2.root_machine.delta == {} and toy2.root_machine.gamma == {}
    assert validate(toy2) == []


def test_subtract_start_rejected(toy2):
    with pytest.raises(HierarchyError):
        apply(toy2, SubtractState(toy2.root, toy2.find("a")))


def test_subtract_foreign_state_rejected(toy2):
    with pytest.raises(HierarchyError):
        apply(toy2, SubtractState(toy2.root, toy2.find("c")))


def test_arc_modification(toy2):
    n = toy2.machine_by_name("N")
    b, c = toy2.find("b"), toy2.find("c")
    apply(toy2, ArcModification(n, {(c, 0): b}, {(c, 0): 4.0}, c))
    mm = toy2.machines[n]
    assert mm.delta == {(c, 0): b} and mm.start == c
    with pytest.raises(HierarchyError):
        apply(toy2, ArcModification(n, {(c, 0): toy2.find("a")}, {(c, 0): 1.0}, c))
    with pytest.raises(HierarchyError):
        apply(toy2, ArcModification(n, {(c, 0): b}, {}, c))


def test_composition(toy2):
    m = MealyMachine.build(["q1", "q2", "q3"], "q1", [("q1", 0, "q2", 1.0)], name="M")
    out = apply(Hierarchy(toy2.alphabet), Composition(m, [toy2]))
    assert out.root == m.id
    assert out.child[m.node("q1")] == toy2.root
    assert out.is_flat(m.node("q2")) and out.is_flat(m.node("q3"))
    assert validate(out) == []
    assert len(out.machines) == 3


def test_mark_arc_modification_marks_ancestors(fig3):
    ec = ExitComputer(fig3)
    ec.update()
    d = fig3.machine_by_name("D")
    mm = fig3.machines[d]
    ec.modify(ArcModification(d, dict(mm.delta), dict(mm.gamma), mm.start))
    assert ec.marks == {d, fig3.machine_by_name("B"), fig3.root}


def test_mark_subtraction_at_root(toy2):
    ec = ExitComputer(toy2)
    ec.update()
    ec.modify(SubtractState(toy2.root, toy2.find("m")))
    assert ec.marks == {toy2.root}
    assert set(ec.table.entries) == {toy2.root}


def test_mark_composition_keeps_part_marks(toy2, fig3):
    fig3.alphabet = list(toy2.alphabet)
    ec = ExitComputer(toy2)
    ec.update()
    fresh = fig3
    m = MealyMachine.build(["q1", "q2", "q3"], "q1", [], name="M")
    ec.modify(Composition(m, [ec, fresh]))
    assert ec.marks == {m.id} | set(fresh.machines)
    assert ec.marks.is_subtree(ec.hierarchy)
    assert ec.update() == 1 + len(fresh.machines)


def test_init_marks(toy2):
    assert init_marks(toy2) == {toy2.root, toy2.machine_by_name("N")}
    h = Hierarchy(["x"])
    h.add_machine(["s"], "s")
    assert init_marks(h) == {h.root}


def test_markset_subtree_check(fig3):
    a, b, d = fig3.root, fig3.machine_by_name("B"), fig3.machine_by_name("D")
    assert MarkSet().is_subtree(fig3)
    assert MarkSet({a, b}).is_subtree(fig3)
    assert not MarkSet({b}).is_subtree(fig3)
    assert not MarkSet({a, d}).is_subtree(fig3)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_subtree_property_under_random_interleavings(seed):
    rng = random.Random(seed)
    ec = ExitComputer(random_hierarchy(rng, max_depth=3))
    assert ec.marks.is_subtree(ec.hierarchy)
    for _ in range(12):
        if rng.random() < 0.3:
            ec.update()
        else:
            def attach():
                sub = ExitComputer(random_hierarchy(rng, max_depth=2, max_states=3, nsym=len(ec.hierarchy.alphabet)))
                if rng.random() < 0.5:
                    sub.update()
                return sub if rng.random() < 0.7 else sub.hierarchy
            ec.modify(random_modification(rng, ec.hierarchy, attach, current=ec))
        assert validate(ec.hierarchy) == []
        assert ec.marks.is_subtree(ec.hierarchy)
        assert ec.marks <= ec.hierarchy.machines.keys()


@settings(max_examples=40, deadline=None)
@given(seeds, st.booleans())
def test_add_then_subtract_restores(seed, with_sub):
    rng = random.Random(seed)
    h = random_hierarchy(rng)
    before = canonical(h)
    mid = rng.choice(sorted(h.machines))
    sub = random_hierarchy(rng, max_depth=2, nsym=len(h.alphabet)) if with_sub else None
    apply(h, AddState(mid, "added", sub))
    assert canonical(h) != before
    apply(h, SubtractState(mid, h.machines[mid].node("added")))
    assert canonical(h) == before
    assert validate(h) == []


def _extract(h, m):
    """Sub-hierarchy of h rooted at machine m, sharing the machine objects."""
    out = Hierarchy(h.alphabet)
    for k in h.subtree(m):
        out.insert(h.machines[k], None if k == m else h.parent[k][1])
    return out


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_brute_force_change_reaches_any_hierarchy(seed):
    rng = random.Random(seed)
    nsym = rng.randint(1, 3)
    z = random_hierarchy(rng, max_depth=3, nsym=nsym)
    target = random_hierarchy(rng, max_depth=3, nsym=nsym)
    want = flatten(target)
    troot = target.root_machine
    old = list(z.root_machine.states)

    new_of = {}
    for q in troot.states:
        sub = _extract(target, target.child[q]) if q in target.child else None
        apply(z, AddState(z.root, f"new:{troot.labels[q]}", sub))
        new_of[q] = z.root_machine.node(f"new:{troot.labels[q]}")
    delta = {(new_of[q], x): new_of[v] for (q, x), v in troot.delta.items()}
    gamma = {(new_of[q], x): c for (q, x), c in troot.gamma.items()}
    apply(z, ArcModification(z.root, delta, gamma, new_of[troot.start]))
    for q in old:
        apply(z, SubtractState(z.root, q))
    assert validate(z) == []

    got = flatten(z)
    ren = {v: k for k, v in new_of.items()}
    assert sorted(ren.get(v, v) for v in got.vertices) == sorted(want.vertices)
    assert sorted((ren.get(u, u), x, ren.get(v, v), c) for u, x, v, c in got.edges) == sorted(want.edges)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_single_modification_marks_at_most_depth(seed):
    rng = random.Random(seed)
    ec = ExitComputer(random_hierarchy(rng))
    ec.update()
    depth = ec.hierarchy.depth()

    def attach():
        sub = ExitComputer(random_hierarchy(rng, max_depth=2, nsym=len(ec.hierarchy.alphabet)))
        sub.update()
        return sub

    mod = random_modification(rng, ec.hierarchy, attach, current=ec)
    ec.modify(mod)
    if isinstance(mod, Composition):
        assert ec.marks == {mod.machine.id}
    else:
        assert 1 <= len(ec.marks) <= depth


def test_mark_without_computer(toy2):
    marks = MarkSet()
    mod = AddState(toy2.machine_by_name("N"), "d")
    apply(toy2, mod)
    mark(toy2, marks, mod)
    assert marks == {toy2.root, toy2.machine_by_name("N")}
