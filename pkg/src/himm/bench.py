"""Timing harness for the three robot-lab studies."""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass, field

from .baselines import ch_preprocess, ch_query, dijkstra_flat, flatten
from .casestudy import build_case_study, connect_new_house, endpoints, study_modifications
from .core import run_plan
from .exits import ExitComputer
from .planner import plan

CSV_VERSION = 1
COLUMNS = ["study", "method", "phase", "seconds", "plan_cost", "plan_len", "machines_recomputed"]


@dataclass
class Row:
    study: int
    method: str
    phase: str
    seconds: float
    plan_cost: float | None = None
    plan_len: int | None = None
    machines_recomputed: int | None = None


@dataclass
class BenchReport:
    study: int
    rows: list[Row] = field(default_factory=list)
    replay_ok: bool = True

    def get(self, method: str, phase: str) -> Row:
        for r in self.rows:
            if r.method == method and r.phase == phase:
                return r
        raise KeyError((method, phase))

    @property
    def costs(self) -> dict[str, float]:
        return {r.method: r.plan_cost for r in self.rows if r.phase == "query"}

    @property
    def agree(self) -> bool:
        vals = list(self.costs.values())
        return all(abs(v - vals[0]) <= 1e-9 or v == vals[0] for v in vals)


def _median_time(fn, repeat: int, reset=None):
    times, result = [], None
    for _ in range(max(1, repeat)):
        if reset is not None:
            reset()
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), result


def prepare_study(study: int) -> ExitComputer:
    """Study-1 model with all exit costs computed, then the study's modifications
    applied and marked (not yet recomputed). Study 1 is returned fully marked."""
    h = build_case_study()
    ec = ExitComputer(h)
    if study == 1:
        return ec
    ec.update()
    for mod in study_modifications(h, study):
        ec.modify(mod)
    if study == 2:
        ec.modify(connect_new_house(ec.hierarchy))
    return ec


def run_study(study: int, repeat: int = 5, with_ch: bool = True, ch_repeat: int | None = None) -> BenchReport:
    """Time every phase of one study; ``ch_repeat`` overrides ``repeat`` for CH preprocessing."""
    ec = prepare_study(study)
    h = ec.hierarchy
    report = BenchReport(study)
    add = report.rows.append

    pending = set(ec.marks)

    def restore():
        ec.table.marks.clear()
        ec.table.marks.update(pending)

    sec, count = _median_time(ec.update, repeat, restore)
    add(Row(study, "hier", "exits_incremental", sec, machines_recomputed=count))
    sec, count = _median_time(ec.recompute_all, repeat)
    add(Row(study, "hier", "exits_full", sec, machines_recomputed=count))

    src, dst = endpoints(h, study)
    sec, p = _median_time(lambda: plan(h, ec.table, src, dst), repeat)
    add(Row(study, "hier", "query", sec, p.cost, len(p.inputs)))
    plans = {"hier": p.inputs}

    sec, g = _median_time(lambda: flatten(h), 1)
    add(Row(study, "dijkstra", "flatten", sec))
    sec, (cost, inputs) = _median_time(lambda: dijkstra_flat(g, src, dst), repeat)
    add(Row(study, "dijkstra", "query", sec, cost, len(inputs)))
    plans["dijkstra"] = inputs

    if with_ch:
        sec, idx = _median_time(lambda: ch_preprocess(g), repeat if ch_repeat is None else ch_repeat)
        add(Row(study, "ch", "preprocess", sec))
        sec, (cost, inputs) = _median_time(lambda: ch_query(idx, src, dst), repeat)
        add(Row(study, "ch", "query", sec, cost, len(inputs)))
        plans["ch"] = inputs

    for method, inputs in plans.items():
        traj, cost = run_plan(h, src, inputs)
        if traj.end != dst or abs(cost - report.costs[method]) > 1e-9:
            report.replay_ok = False
    return report


def to_csv(reports: list[BenchReport], header: bool = True) -> str:
    buf = io.StringIO()
    if header:
        buf.write(f"# himm-bench csv v{CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(COLUMNS)
    for rep in reports:
        for r in rep.rows:
            w.writerow(
                [
                    r.study,
                    r.method,
                    r.phase,
                    f"{r.seconds:.6g}",
                    "" if r.plan_cost is None else f"{r.plan_cost:g}",
                    "" if r.plan_len is None else r.plan_len,
                    "" if r.machines_recomputed is None else r.machines_recomputed,
                ]
            )
    return buf.getvalue()


def to_table(reports: list[BenchReport]) -> str:
    lines = [f"{'study':>5}  {'method':<9} {'phase':<18} {'seconds':>11} {'cost':>8} {'len':>5} {'recomp':>6}"]
    for rep in reports:
        for r in rep.rows:
            lines.append(
                f"{r.study:>5}  {r.method:<9} {r.phase:<18} {r.seconds:>11.6f} "
                f"{'' if r.plan_cost is None else format(r.plan_cost, 'g'):>8} "
                f"{'' if r.plan_len is None else r.plan_len:>5} "
                f"{'' if r.machines_recomputed is None else r.machines_recomputed:>6}"
            )
    return "\n".join(lines) + "\n"
