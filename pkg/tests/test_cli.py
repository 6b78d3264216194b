import csv
import io
import json
import subprocess
import sys

import pytest

from himm import cli
from himm.cli import main
from himm.io import load_model

from conftest import DATA

TOY = str(DATA / "toy2.json")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_ok(capsys):
    code, out, _ = run(capsys, "validate", TOY)
    assert code == 0 and out.startswith("ok: 2 machines, 3 states, depth 2")


def test_loader_rejects_dangling_transition(capsys, tmp_path):
    doc = json.loads((DATA / "toy2.json").read_text())
    doc["machines"][0]["transitions"][0]["to"] = "zz"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "validate", str(path))
    assert code == 2 and "zz" in err


def test_validate_reports_defects(capsys, monkeypatch):
    # the loader already refuses most defects, so break a loaded model directly
    h = load_model(TOY)
    n = h.machines[h.machine_by_name("N")]
    n.gamma.clear()
    monkeypatch.setattr(cli, "load_model", lambda path: h)
    code, out, _ = run(capsys, "validate", TOY)
    assert code == 1 and "gamma/delta domain mismatch" in out
    code, _, err = run(capsys, "plan", TOY, "--from", "a", "--to", "b")
    assert code == 1 and "invalid" in err


@pytest.mark.parametrize("method", ["hier", "dijkstra", "ch"])
def test_plan_toy2(capsys, method):
    code, out, _ = run(capsys, "plan", TOY, "--from", "b", "--to", "a", "--method", method)
    assert code == 0
    assert out.splitlines() == ["plan: g", "cost: 3"]


def test_plan_stream(capsys):
    code, out, _ = run(capsys, "plan", TOY, "--from", "c", "--to", "b", "--stream")
    assert code == 0 and out.splitlines() == ["cost: 5", "g", "g"]


def test_plan_unreachable_and_dumps(capsys, tmp_path):
    dump, flat = tmp_path / "exits.txt", tmp_path / "flat.txt"
    code, out, _ = run(capsys, "plan", TOY, "--from", "a", "--to", "b", "--dump-exits", str(dump))
    assert code == 0 and "cost: 2" in out
    assert len(dump.read_text().splitlines()) == 4
    code, out, _ = run(capsys, "plan", TOY, "--from", "c", "--to", "c", "--method", "dijkstra",
                       "--export-flat", str(flat))
    assert out.splitlines() == ["plan: ", "cost: 0"]
    assert len(flat.read_text().splitlines()) == 4


def test_plan_unknown_state(capsys):
    code, _, err = run(capsys, "plan", TOY, "--from", "zz", "--to", "a")
    assert code == 2 and "zz" in err


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "validate", str(tmp_path / "nope.json"))
    assert code == 2 and err.startswith("error:")


def test_parse_error(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert run(capsys, "validate", str(path))[0] == 2


def test_modify(capsys, tmp_path):
    script = tmp_path / "s.json"
    script.write_text(json.dumps([
        {"op": "add_state", "machine": "N", "state": "d"},
        {"op": "arc_modification", "machine": "N", "start": "b",
         "transitions": [{"from": "b", "input": "h", "to": "d", "cost": 4}]},
        {"op": "subtract_state", "machine": "N", "state": "c"},
    ]))
    out_path = tmp_path / "out.json"
    code, out, _ = run(capsys, "modify", TOY, "--script", str(script), "--out", str(out_path))
    assert code == 0 and "applied 3" in out
    h = load_model(out_path)
    assert sorted(h.label(q) for q in h.flat_states()) == ["a", "b", "d"]
    code, out, _ = run(capsys, "plan", str(out_path), "--from", "a", "--to", "d")
    assert out.splitlines() == ["plan: g h", "cost: 6"]


def test_modify_composition_with_current(capsys, tmp_path):
    script = tmp_path / "s.json"
    script.write_text(json.dumps([{
        "op": "composition",
        "machine": {"id": "Top", "states": ["u", "v"], "start": "u",
                    "transitions": [{"from": "u", "input": "h", "to": "v", "cost": 7}]},
        "parts": ["current"],
    }]))
    out_path = tmp_path / "out.json"
    assert run(capsys, "modify", TOY, "--script", str(script), "--out", str(out_path))[0] == 0
    code, out, _ = run(capsys, "plan", str(out_path), "--from", "a", "--to", "v")
    assert out.splitlines() == ["plan: h", "cost: 7"]


def test_modify_bad_record(capsys, tmp_path):
    script = tmp_path / "s.json"
    script.write_text(json.dumps([{"op": "subtract_state", "machine": "R", "state": "a"}]))
    code, _, err = run(capsys, "modify", TOY, "--script", str(script), "--out", str(tmp_path / "o.json"))
    assert code == 2 and "start" in err


def _pairs(tmp_path, text="a c\nc b  # comment\n\nb a\n"):
    path = tmp_path / "pairs.txt"
    path.write_text(text)
    return str(path)


def test_compare(capsys, tmp_path):
    code, out, _ = run(capsys, "compare", TOY, "--pairs", _pairs(tmp_path))
    assert code == 0
    lines = out.splitlines()
    assert lines[1:4] == ["a\tc\t3\t3\t3", "c\tb\t5\t5\t5", "b\ta\t3\t3\t3"]
    assert lines[4].startswith("# seconds:")


def test_compare_stale(capsys, tmp_path):
    script = tmp_path / "s.json"
    script.write_text(json.dumps([{"op": "add_state", "machine": "N", "state": "d"}]))
    code, _, err = run(capsys, "compare", TOY, "--pairs", _pairs(tmp_path),
                       "--script", str(script), "--skip-update")
    assert code == 1 and "stale" in err
    code, _, _ = run(capsys, "compare", TOY, "--pairs", _pairs(tmp_path), "--script", str(script))
    assert code == 0


def test_compare_bad_pairs(capsys, tmp_path):
    code, _, err = run(capsys, "compare", TOY, "--pairs", _pairs(tmp_path, "a b c\n"))
    assert code == 2 and "expected" in err


def test_bench_study3_csv(capsys, tmp_path):
    out_path = tmp_path / "b.csv"
    code, _, _ = run(capsys, "bench", "--study", "3", "--format", "csv", "--repeat", "1",
                     "--no-ch", "--out", str(out_path))
    assert code == 0
    text = out_path.read_text()
    assert text.startswith("# himm-bench csv v1\n")
    rows = list(csv.DictReader(io.StringIO(text.split("\n", 1)[1])))
    assert list(rows[0]) == ["study", "method", "phase", "seconds", "plan_cost", "plan_len",
                             "machines_recomputed"]
    by = {(r["method"], r["phase"]): r for r in rows}
    assert by[("hier", "exits_incremental")]["machines_recomputed"] == "2"
    assert by[("hier", "query")]["plan_cost"] == by[("dijkstra", "query")]["plan_cost"] == "149"


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "himm.cli", "validate", TOY],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("ok:")
