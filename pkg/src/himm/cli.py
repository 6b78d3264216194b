"""Command-line interface.

Exit codes: 0 success, 1 validation failure, stale exit table or cost
disagreement, 2 I/O or parse error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import bench
from .baselines import ch_preprocess, ch_query, dijkstra_flat, flatten
from .core import INF, Hierarchy, HierarchyError, run_plan, validate
from .exits import ExitComputer, StaleTableError
from .io import ModelFormatError, load_model, load_script, modification_from_dict, save_model
from .modifications import Composition
from .planner import plan

TOL = 1e-9


class UsageError(Exception):
    pass


def _node(h: Hierarchy, name: str) -> int:
    try:
        return h.find(name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _apply_script(ec: ExitComputer, path: str) -> int:
    records = load_script(path)
    for i, rec in enumerate(records):
        mod = modification_from_dict(ec.hierarchy, rec, f"{path}[{i}]")
        if isinstance(mod, Composition):
            # keep the current exit table for the composed-in model
            mod.parts = [ec if p is ec.hierarchy else p for p in mod.parts]
        try:
            ec.modify(mod)
        except HierarchyError as exc:
            raise ModelFormatError(f"{path}[{i}]: {exc}") from None
    return len(records)


def _fmt_cost(c: float) -> str:
    return "inf" if c == INF else f"{c:g}"


def cmd_validate(args) -> int:
    h = load_model(args.model)
    problems = validate(h)
    for p in problems:
        print(p)
    if problems:
        return 1
    print(f"ok: {len(h.machines)} machines, {sum(1 for _ in h.flat_states())} states, depth {h.depth()}")
    return 0


def cmd_plan(args) -> int:
    h = load_model(args.model)
    if validate(h):
        print("model is invalid; run `himm validate`", file=sys.stderr)
        return 1
    src, dst = _node(h, args.source), _node(h, args.target)
    if args.method == "hier":
        ec = ExitComputer(h)
        ec.update()
        if args.dump_exits:
            Path(args.dump_exits).write_text(ec.table.dump(h))
        p = plan(h, ec.table, src, dst, lazy=args.stream)
        cost = p.cost
        if args.stream:
            cur = p.cursor()
            inputs = []
            print(f"cost: {_fmt_cost(cost)}")
            while (x := cur.next_input()) is not None:
                inputs.append(x)
                print(h.alphabet[x], flush=True)
            return 0
        inputs = p.inputs
    else:
        g = flatten(h)
        if args.export_flat:
            Path(args.export_flat).write_text(g.export(h.alphabet))
        if args.method == "dijkstra":
            cost, inputs = dijkstra_flat(g, src, dst)
        else:
            cost, inputs = ch_query(ch_preprocess(g), src, dst)
    print(f"plan: {' '.join(h.alphabet[x] for x in inputs) if cost < INF else '(none)'}")
    print(f"cost: {_fmt_cost(cost)}")
    return 0


def cmd_modify(args) -> int:
    h = load_model(args.model)
    ec = ExitComputer(h)
    n = _apply_script(ec, args.script)
    problems = validate(ec.hierarchy)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return 1
    save_model(ec.hierarchy, args.out)
    print(f"applied {n} modification(s); wrote {args.out}")
    return 0


def _read_pairs(path: str) -> list[tuple[str, str]]:
    pairs = []
    for ln, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ModelFormatError(f"{path}:{ln}: expected `from to`")
        pairs.append((parts[0], parts[1]))
    return pairs


def cmd_compare(args) -> int:
    h = load_model(args.model)
    ec = ExitComputer(h)
    ec.update()
    if args.script:
        _apply_script(ec, args.script)
        if not args.skip_update:
            ec.update()
    h = ec.hierarchy
    pairs = [(_node(h, a), _node(h, b), a, b) for a, b in _read_pairs(args.pairs)]
    try:
        ec.table.require_valid()
    except StaleTableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    g = flatten(h)
    t0 = time.perf_counter()
    idx = ch_preprocess(g)
    ch_pre = time.perf_counter() - t0
    timings = {"hier": 0.0, "dijkstra": 0.0, "ch": 0.0}
    status = 0
    print("from\tto\thier\tdijkstra\tch")
    for src, dst, a, b in pairs:
        res = {}
        t0 = time.perf_counter()
        p = plan(h, ec.table, src, dst)
        timings["hier"] += time.perf_counter() - t0
        res["hier"] = (p.cost, p.inputs)
        t0 = time.perf_counter()
        res["dijkstra"] = dijkstra_flat(g, src, dst)
        timings["dijkstra"] += time.perf_counter() - t0
        t0 = time.perf_counter()
        res["ch"] = ch_query(idx, src, dst)
        timings["ch"] += time.perf_counter() - t0
        costs = [c for c, _ in res.values()]
        ok = all(c == costs[0] or abs(c - costs[0]) <= TOL for c in costs)
        for c, inputs in res.values():
            if c < INF:
                traj, rc = run_plan(h, src, inputs)
                ok = ok and traj.end == dst and abs(rc - c) <= TOL
        print(f"{a}\t{b}\t" + "\t".join(_fmt_cost(c) for c in costs) + ("" if ok else "\tMISMATCH"))
        if not ok:
            status = 1
    print(f"# seconds: hier {timings['hier']:.6f}  dijkstra {timings['dijkstra']:.6f}  "
          f"ch {timings['ch']:.6f} (+ preprocess {ch_pre:.6f})")
    if status:
        print("error: methods disagree", file=sys.stderr)
    return status


def cmd_bench(args) -> int:
    studies = [1, 2, 3] if args.study == "all" else [int(args.study)]
    reports = [bench.run_study(k, repeat=args.repeat, with_ch=not args.no_ch) for k in studies]
    text = bench.to_csv(reports) if args.format == "csv" else bench.to_table(reports)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    bad = [r.study for r in reports if not (r.agree and r.replay_ok)]
    if bad:
        print(f"error: planners disagree in study {bad}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="himm", description="Hierarchical Mealy machine planner")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plan", help="optimal plan between two states")
    p.add_argument("model")
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("--stream", action="store_true", help="emit inputs one at a time (hier only)")
    p.add_argument("--method", choices=["hier", "dijkstra", "ch"], default="hier")
    p.add_argument("--dump-exits", metavar="FILE", help="write `machine input cost` lines")
    p.add_argument("--export-flat", metavar="FILE", help="write `from input to cost` lines")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("modify", help="apply a modification script")
    p.add_argument("model")
    p.add_argument("--script", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_modify)

    p = sub.add_parser("bench", help="run the robot lab studies")
    p.add_argument("--study", choices=["1", "2", "3", "all"], required=True)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--format", choices=["csv", "table"], default="table")
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--no-ch", action="store_true", help="skip contraction hierarchies")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("compare", help="run all three planners on state pairs")
    p.add_argument("model")
    p.add_argument("--pairs", required=True, help="file with one `from to` pair per line")
    p.add_argument("--script", help="modification script applied before comparing")
    p.add_argument("--skip-update", action="store_true",
                   help="do not recompute exit costs after --script (exercises the staleness check)")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ModelFormatError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
