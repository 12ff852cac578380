"""Tests for the command-line interface."""

import csv
import json
import subprocess
import sys

import pytest

from fairleak.cli import main
from fairleak.experiment import CSV_HEADER


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# ── sensitivity ──


def test_smooth_sensitivity(capsys):
    code, out, _ = run(capsys, "sensitivity", "--metric", "sp", "--m", "1", "--n", "12",
                       "--n0", "3", "--beta", "0.5")
    assert code == 0
    assert out.strip() == "0.433333"


def test_global_sensitivity(capsys):
    code, out, _ = run(capsys, "sensitivity", "--metric", "sp", "--m", "1", "--n", "4")
    assert code == 0 and out.strip() == "0.833333"


def test_abs_smooth_sensitivity(capsys):
    code, out, _ = run(capsys, "sensitivity", "--metric", "abs_sp", "--m", "1", "--n0", "3",
                       "--beta", "0.5")
    assert code == 0 and out.strip() == "0.333333"


def test_sensitivity_domain_error(capsys):
    code, _, err = run(capsys, "sensitivity", "--metric", "sp", "--m", "1", "--n", "2")
    assert code == 2 and "error" in err


# ── usage errors ──


def test_unknown_subcommand(capsys):
    code, _, err = run(capsys, "explode")
    assert code == 1 and "usage:" in err


def test_unknown_flag(capsys):
    code, _, err = run(capsys, "sensitivity", "--metric", "sp", "--m", "1", "--bogus", "2")
    assert code == 1 and "usage:" in err


def test_no_command(capsys):
    code, _, err = run(capsys)
    assert code == 1 and "usage:" in err


# ── synth / reveal ──


def test_synth_then_reveal(tmp_path, capsys):
    data = tmp_path / "d.csv"
    code, _, _ = run(capsys, "synth", "--n", "80", "--n0", "8", "--seed", "3", "--out", str(data))
    assert code == 0
    assert data.read_text().splitlines()[0] == "id,y,a,score"

    code, out, _ = run(capsys, "reveal", "--data", str(data), "--attack", "compressed_sensing",
                       "--m", "40")
    assert code == 0
    result = json.loads(out)
    assert result["leakage_pct"] == 100.0 and result["avg_sp_err"] == 0.0


def test_reveal_full_rank_with_mapping(tmp_path, capsys):
    rows = ["id,y,a,score"] + [f"{i},1,{'Black' if i % 4 == 0 else 'White'},{(i % 7) / 7}"
                               for i in range(24)]
    data = tmp_path / "d.csv"
    data.write_text("\n".join(rows) + "\n")
    code, out, _ = run(capsys, "reveal", "--data", str(data), "--attack", "full_rank",
                       "--a-map", "White=1,Black=0")
    assert code == 0 and json.loads(out)["leakage_pct"] == 100.0


def test_reveal_missing_file(tmp_path, capsys):
    code, _, err = run(capsys, "reveal", "--data", str(tmp_path / "none.csv"))
    assert code == 2 and "error" in err


# ── conceal ──


def test_conceal_json(tmp_path, capsys):
    src = tmp_path / "q.json"
    src.write_text(json.dumps({"metric": "SP", "values": [0.1, -0.05, 0.2]}))
    out = tmp_path / "o.json"
    args = ["conceal", "--in", str(src), "--out", str(out), "--mechanism", "cauchy_smooth",
            "--epsilon", "10", "--n", "100", "--n0", "10"]
    assert run(capsys, *args)[0] == 0
    first = json.loads(out.read_text())
    assert first["mechanism"] == "cauchy_smooth" and len(first["values"]) == 3
    assert first["meta"]["scale"] > 0
    assert run(capsys, *args)[0] == 0
    assert json.loads(out.read_text()) == first


def test_conceal_lines_laplace_global(tmp_path, capsys):
    src = tmp_path / "q.txt"
    src.write_text("0.1\n0.2\n")
    out = tmp_path / "o.json"
    code, _, _ = run(capsys, "conceal", "--in", str(src), "--out", str(out), "--mechanism",
                     "laplace_global", "--epsilon", "inf", "--n", "20")
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["values"] == [0.1, 0.2] and payload["epsilon"] == "inf"


def test_conceal_needs_n0(tmp_path, capsys):
    src = tmp_path / "q.txt"
    src.write_text("0.1\n")
    code, _, _ = run(capsys, "conceal", "--in", str(src), "--out", str(tmp_path / "o.json"),
                     "--mechanism", "cauchy_smooth", "--epsilon", "1", "--n", "20")
    assert code == 1


# ── experiment ──


def test_experiment_csv(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 40, "n0": 5, "attack": "full_rank", "trials": 2}))
    out = tmp_path / "rows.csv"
    code, msg, _ = run(capsys, "experiment", "--config", str(cfg), "--out", str(out))
    assert code == 0 and "2 rows" in msg
    with out.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_HEADER and len(rows) == 3
    assert all(r[4] == "inf" and float(r[7]) == 100.0 for r in rows[1:])


def test_experiment_json_with_data(tmp_path, capsys):
    data = tmp_path / "d.csv"
    run(capsys, "synth", "--n", "30", "--n0", "5", "--out", str(data))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"attack": "full_rank", "trials": 1}))
    out = tmp_path / "rows.json"
    code, _, _ = run(capsys, "experiment", "--config", str(cfg), "--out", str(out),
                     "--data", str(data))
    assert code == 0
    rec = json.loads(out.read_text())[0]
    assert (rec["n"], rec["n0"], rec["leakage_pct"]) == (30, 5, 100.0)


def test_experiment_bad_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nope": 1}))
    code, _, err = run(capsys, "experiment", "--config", str(cfg), "--out", str(tmp_path / "r"))
    assert code == 2 and "nope" in err


@pytest.mark.parametrize("argv, code", [(["sensitivity", "--metric", "sp", "--m", "1",
                                           "--n", "4"], 0), (["bogus"], 1)])
def test_console_entry_point(argv, code):
    proc = subprocess.run([sys.executable, "-m", "fairleak.cli", *argv], capture_output=True,
                          text=True)
    assert proc.returncode == code
