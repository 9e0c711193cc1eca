import json
from pathlib import Path

import pytest

from ldlimit.cli import main
from ldlimit.config import ConfigError, parse_config, q1_document
from ldlimit.suites import HEADERS

ROOT = Path(__file__).resolve().parents[1]
Q1 = ROOT / "configs" / "q1.json"


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_bundled_config_is_q1():
    assert json.loads(Q1.read_text())["system"] == q1_document()["system"]


def test_noise_algebra_only(tmp_path, capsys):
    doc = {"random_instance": {"n": 2, "d": 2, "seed": 3}, "suites": ["noise-algebra"]}
    out = tmp_path / "out"
    assert main(["run", str(write(tmp_path, doc)), "--out", str(out)]) == 0
    lines = (out / "noise-algebra.csv").read_text().splitlines()
    assert lines[0] == HEADERS["noise-algebra"]
    assert len(lines) == 1 + 16
    report = (out / "report.txt").read_text()
    assert "[PASS] noise-algebra" in report and "OVERALL: PASS" in report
    assert "random instance seed: 3" in report


def test_bad_coupling_names_field(tmp_path, capsys):
    doc = q1_document()
    doc["bath"] = {"n": 2, "gamma": [0, 1, 2], "beta": 1}
    doc["system"]["D"] = {"1,2": [[1, 0], [0, 1]], "2,1": [[2, 0], [0, 1]]}
    assert main(["validate", str(write(tmp_path, doc))]) == 2
    assert "system.D" in capsys.readouterr().err


def test_validate_ok(tmp_path, capsys):
    assert main(["validate", str(Q1)]) == 0
    assert "config OK" in capsys.readouterr().out


@pytest.mark.parametrize("mutate,field", [
    (lambda d: d["bath"].update(beta=-1), "bath"),
    (lambda d: d.update(grid={"count": 3}), "grid.count"),
    (lambda d: d.update(rho0=[[1, 0], [0, 1]]), "rho0"),
    (lambda d: d.update(suites=["plots"]), "suites"),
    (lambda d: d.update(tolerances={"nope": 1}), "tolerances.nope"),
    (lambda d: d["system"].update(H_S=[[0, [0, 1]], [0, 0]]), "system.H_S"),
    (lambda d: d["system"].update(D={"1,1": [[0, "x"], [0, 0]]}), "system.D[1,1]"),
])
def test_config_errors(mutate, field):
    doc = q1_document()
    mutate(doc)
    with pytest.raises(ConfigError, match=field.replace("[", r"\[").replace("]", r"\]")):
        parse_config(doc)


def test_complex_entries_parse():
    doc = q1_document()
    doc["system"]["D"]["1,1"] = [[0, [0, -1]], [[0, 1], 0]]
    cfg = parse_config(doc)
    assert cfg.system.D_blocks[0, 0, 0, 1] == -1j


def test_flags(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["run", str(Q1), "--suite", "scatter-check", "--suite", "block-check",
                 "--grid-count", "5", "--tol", "block_slope_band=0.2", "--out", str(out)])
    assert code == 0
    assert sorted(p.name for p in out.iterdir()) == ["block-check.csv", "report.txt",
                                                     "scatter-check.csv"]
    assert len((out / "scatter-check.csv").read_text().splitlines()) == 6
    assert main(["run", str(Q1), "--tol", "bogus=1", "--out", str(out)]) == 2
    assert main(["run", str(Q1), "--suite", "coeff-sweep", "--grid-count", "4",
                 "--out", str(out)]) == 2


def test_full_run_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    code_a = main(["run", str(Q1), "--out", str(a)])
    code_b = main(["run", str(Q1), "--out", str(b)])
    assert code_a == code_b
    csvs = sorted(p.name for p in a.glob("*.csv"))
    assert csvs == sorted(f"{name}.csv" for name in HEADERS)
    for name in csvs:
        text = (a / name).read_text()
        assert text == (b / name).read_text()
        assert text.splitlines()[0] == HEADERS[name[:-4]]
    report = (a / "report.txt").read_text()
    # totals equal the per-suite lines
    marks = [line for line in report.splitlines() if line.startswith("[")]
    assert len(marks) == 8
    passed = sum(m.startswith("[PASS]") for m in marks)
    assert f"suites passed: {passed}/8" in report
    assert (code_a == 0) == (passed == 8)


def test_numbers_have_17_digits(tmp_path, capsys):
    out = tmp_path / "o"
    main(["run", str(Q1), "--suite", "scatter-check", "--out", str(out)])
    row = (out / "scatter-check.csv").read_text().splitlines()[1].split(",")
    assert row[0] == "0.125"
    assert len(row[1].replace(".", "").lstrip("0")) == 17


def test_report_command(tmp_path, capsys):
    out = tmp_path / "o"
    main(["run", str(Q1), "--suite", "hp-check", "--out", str(out)])
    assert main(["report", str(out)]) == 0
    assert "hp-check.csv: 1 rows" in capsys.readouterr().out
    (out / "hp-check.csv").write_text("wrong,header\n")
    assert main(["report", str(out)]) == 1
    assert main(["report", str(tmp_path / "missing")]) == 2


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "ldlimit", "validate", str(Q1)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "config OK" in r.stdout
