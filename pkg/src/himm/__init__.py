"""Optimal and reconfigurable planning on hierarchical Mealy machines."""

from .core import (
    INF,
    Hierarchy,
    HierarchyError,
    MealyMachine,
    Trajectory,
    resolve_start,
    run_plan,
    step,
    validate,
)
from .exits import ExitComputer, ExitTable, StaleTableError, compute_optimal_exits
from .modifications import (
    AddState,
    ArcModification,
    Composition,
    MarkSet,
    SubtractState,
    apply,
    init_marks,
    mark,
)
from .planner import Plan, plan

__all__ = [
    "INF",
    "AddState",
    "ArcModification",
    "Composition",
    "ExitComputer",
    "ExitTable",
    "Hierarchy",
    "HierarchyError",
    "MarkSet",
    "MealyMachine",
    "Plan",
    "StaleTableError",
    "SubtractState",
    "Trajectory",
    "apply",
    "compute_optimal_exits",
    "init_marks",
    "mark",
    "plan",
    "resolve_start",
    "run_plan",
    "step",
    "validate",
]
