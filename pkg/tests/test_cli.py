import csv
import json
import subprocess
import sys

import pytest

from conftest import FIXTURES
from ladderalg.cli import EXIT_ALGEBRA, EXIT_CONSTRAINT, EXIT_OK, EXIT_USAGE, dumps, main

SMALL = ["--grid", ",,600"]


def schema(obj):
    """Key structure of a report: dicts keep their keys, leaves become a type tag."""
    if isinstance(obj, dict):
        return {k: schema(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return "list"
    return "leaf"


def _nullable_equal(got, ref):
    # null leaves stand in for absent sub-reports (e.g. no case for pseudo families)
    if isinstance(ref, dict) and isinstance(got, dict):
        return list(got) == list(ref) and all(_nullable_equal(got[k], ref[k]) for k in ref)
    return got == ref or got == "leaf" or ref == "leaf"


def test_catalog_listing(capsys):
    assert main(["catalog"]) == EXIT_OK
    out = capsys.readouterr().out
    assert sum(1 for line in out.splitlines() if not line.startswith(" ")) == 8


def test_catalog_filter(capsys):
    assert main(["catalog", "--family", "pt"]) == EXIT_OK
    ids = [line.split(":")[0] for line in capsys.readouterr().out.splitlines()
           if not line.startswith(" ")]
    assert ids == ["pt-canonical", "C-pt2", "D-pt1"]


def test_catalog_unknown():
    assert main(["catalog", "--family", "nothing-like-this"]) == EXIT_USAGE


def test_consistency_all(tmp_path):
    assert main(["consistency", "--family", "all", "--out", str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "C-pt2.consistency.json").read_text())
    assert [e["residual"] for e in rep["equations"]] == ["0"] * 5


def test_consistency_constraint_exit(tmp_path):
    code = main(["consistency", "--family", "D-pt1", "--param", "c1=1", "--param", "alpha=0",
                 "--param", "c2=0", "--out", str(tmp_path)])
    assert code == EXIT_CONSTRAINT
    rep = json.loads((tmp_path / "D-pt1.consistency.json").read_text())
    assert "c1 + alpha*c2" in rep["error"]


@pytest.mark.parametrize("argv", [
    ["consistency", "--param", "c1"],
    ["consistency", "--param", "zeta=1"],
    ["verify", "--grid", "1,2"],
    ["verify", "--family", "B-radial-osc", "--grid", "-1,1,"],
    ["spectrum", "--format", "xml"],
    ["verify", "--family", "harmonic-canonical", "--param", "nu_pt=3"],
    ["frobnicate"],
])
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_verify_pass_and_schema(tmp_path):
    assert main(["verify", "--family", "harmonic-canonical", *SMALL, "--out", str(tmp_path),
                 "--format", "json,csv"]) == EXIT_OK
    rep = json.loads((tmp_path / "harmonic-canonical.verify.json").read_text())
    golden = json.loads((FIXTURES / "verify_schema.json").read_text())
    assert _nullable_equal(schema(rep), golden)
    rows = list(csv.reader((tmp_path / "verify_summary.csv").open()))
    assert rows[0][:3] == ["family", "pass", "tolerance"] and rows[1][0] == "harmonic-canonical"


def test_verify_failure_keeps_schema(tmp_path):
    code = main(["verify", "--family", "C-pt2", "--param", "b=-0.5", *SMALL, "--out",
                 str(tmp_path)])
    assert code == EXIT_ALGEBRA
    rep = json.loads((tmp_path / "C-pt2.verify.json").read_text())
    golden = json.loads((FIXTURES / "verify_schema.json").read_text())
    assert list(rep) == list(golden)
    assert rep["pass"] is False and rep["error"]


def test_verify_partial_family_marks_closure(tmp_path):
    assert main(["verify", "--family", "F-radial-l", "--grid", ",,800", "--out",
                 str(tmp_path)]) == EXIT_OK
    rep = json.loads((tmp_path / "F-radial-l.verify.json").read_text())
    assert rep["enforced"]["closure"] == "unconstrained"


def test_verify_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        main(["verify", "--family", "A-harmonic", *SMALL, "--seed", "7", "--out", str(d)])
    assert (a / "A-harmonic.verify.json").read_bytes() == (b / "A-harmonic.verify.json").read_bytes()


def test_spectrum_csv(tmp_path):
    assert main(["spectrum", "--family", "harmonic-canonical", "--k", "6", "--out",
                 str(tmp_path)]) == EXIT_OK
    rows = list(csv.reader((tmp_path / "harmonic-canonical.spectrum.csv").open()))
    assert rows[0] == ["n", "E_direct", "E_ladder", "J0_eig", "overlap", "annihilation_residual"]
    body = rows[1:-1]
    assert len(body) == 6
    for n, row in enumerate(body):
        assert abs(float(row[1]) - (n + 0.5)) <= 1e-4
        assert abs(float(row[2]) - (n + 0.5)) <= 1e-4
    assert body[0][5] != "" and all(r[5] == "" for r in body[1:])
    assert rows[-1][0].startswith("# stopped=none")


def test_spectrum_clipping_trailer(tmp_path):
    assert main(["spectrum", "--family", "C-pt2", "--k", "20", *SMALL, "--out",
                 str(tmp_path)]) == EXIT_OK
    rows = list(csv.reader((tmp_path / "C-pt2.spectrum.csv").open()))
    assert len(rows) - 2 < 20
    assert "clipped" in rows[-1][0]


def test_float_format():
    text = dumps({"x": 0.1, "z": 1 + 2j, "n": 3, "ok": True, "none": None})
    assert '"x": 0.10000000000000001' in text
    assert '"z": [1, 2]' in text
    assert json.loads(text)["none"] is None


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "ladderalg", "catalog", "--family", "F-radial-l"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("F-radial-l")
