import csv
import io
import json
import subprocess
import sys

import pytest

from subtree_census.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def test_count(capsys):
    code, out, _ = run(["count", "--tree", "2,0,0"], capsys)
    assert code == 0
    assert "# command=count" in out
    assert rows(out) == [{"tree": "2,0,0", "r": "4", "s": "6"}]


def test_moments_exact(capsys):
    code, out, _ = run(["moments", "--max-n", "5", "--m", "2"], capsys)
    assert code == 0
    got = {(r["n"], r["m"]): r["moment"] for r in rows(out)}
    assert got[("5", "2")] == "100"
    assert got[("3", "1")] == "4"


def test_mixed(capsys):
    code, out, _ = run(["mixed", "--max-n", "5", "--m", "2", "--ell", "0"], capsys)
    assert code == 0
    last = rows(out)[-1]
    assert last["n"] == "5" and float(last["moment"]) == 289


def test_singularities_table(capsys):
    code, out, _ = run(["singularities", "--max-m", "3"], capsys)
    assert code == 0
    r = rows(out)
    assert [x["tau"] for x in r[1:]] == ["1.467890", "2.158182", "3.177848"]
    assert {x["branch"] for x in r} == {"square-root"}


def test_singularities_counterexample(capsys):
    code, out, _ = run(["singularities", "--model", "zeta4:a=0.09", "--max-m", "2"], capsys)
    assert code == 3
    assert rows(out)[-1]["branch"] == "no-branch-point(xb)"


def test_sizelaw(capsys):
    code, out, _ = run(["sizelaw", "--format", "json"], capsys)
    assert code == 0
    row = json.loads(out)["rows"][0]
    assert row["mu_x"] == "0.666667" and row["sigma2_x"] == "0.303561"
    code, _, err = run(["sizelaw", "--model", "zeta4:a=0.09"], capsys)
    assert code == 3 and "numeric failure" in err


@pytest.mark.parametrize("argv", [
    ["sample", "--size", "4"],
    ["count", "--tree", "2,0"],
    ["moments", "--model", "motzkin"],
    ["nonsense"],
    ["clt", "--size", "x"],
])
def test_usage_errors(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2 and err.startswith("census:")


def test_sample_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["sample", "--size", "41", "--count", "30", "--seed", "7", "--threads", "1"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = [l for l in a.read_text().splitlines() if not l.startswith("#")]
    assert len(lines) == 30 and all(len(l.split(",")) == 41 for l in lines)


def test_clt_independent_of_threads(capsys):
    base = ["clt", "--size", "101", "--count", "1500", "--seed", "4"]
    _, one, _ = run(base + ["--threads", "1"], capsys)
    _, four, _ = run(base + ["--threads", "4"], capsys)
    a, b = json.loads(one), json.loads(four)
    assert a["report"] == b["report"]
    assert a["config"]["threads"] == 1 and b["config"]["threads"] == 4


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nmax_m = 1\nformat = json\n")
    code, out, _ = run(["singularities", "--config", str(cfg)], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["max_m"] == 1 and len(doc["rows"]) == 2
    code, out, _ = run(["singularities", "--config", str(cfg), "--max-m", "2"], capsys)
    assert len(json.loads(out)["rows"]) == 3
    cfg.write_text("max_m\n")
    code, _, _ = run(["singularities", "--config", str(cfg)], capsys)
    assert code == 2


def test_console_script_entry():
    proc = subprocess.run(
        [sys.executable, "-m", "subtree_census.cli", "count", "--tree", "1,1,0"],
        capture_output=True, text=True, check=True,
    )
    assert rows(proc.stdout) == [{"tree": "1,1,0", "r": "3", "s": "6"}]
