import json
import subprocess
import sys

import pytest

from dirichlet_spaces.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_pmu_lebesgue_all_ones(capsys):
    code, out, _ = run(["pmu", "--measure", "corpus:m"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "x,y,P_mu"
    assert all(float(row.split(",")[2]) == pytest.approx(1.0, abs=1e-12) for row in lines[1:])


def test_pmu_point_mass(tmp_path, capsys):
    p = tmp_path / "d0.json"
    p.write_text(json.dumps({"atoms": [{"angle": 0.0, "mass": 1.0}]}))
    code, out, _ = run(["pmu", "--measure", str(p), "--radii", "", "--point", "0.5", "--format", "json"], capsys)
    assert code == 0
    assert json.loads(out)["values"] == [pytest.approx(3.0, rel=1e-14)]


def test_pmu_bad_inputs(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"atoms": [')
    code, _, err = run(["pmu", "--measure", str(p)], capsys)
    assert code == 2 and "not valid JSON" in err
    code, _, err = run(["pmu", "--measure", "corpus:m", "--point", "1.2"], capsys)
    assert code == 2 and "unit disk" in err
    code, _, err = run(["pmu", "--measure", "corpus:nope"], capsys)
    assert code == 2 and "unknown corpus measure" in err


def test_norms_z(capsys):
    code, out, _ = run(["norms", "--function", "corpus:z", "--measure", "corpus:m", "--fast"], capsys)
    assert code == 0
    rows = {r["functional"]: r for r in json.loads(out)["rows"]}
    assert rows["dirichlet_seminorm_sq"]["value"] == pytest.approx(1.0, abs=1e-8)
    assert all("ratio_to_seminorm" in r for r in rows.values())


def test_norms_constant(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"poly": [{"re": 2.0, "im": 0.0}]}))
    code, out, _ = run(["norms", "--function", str(p), "--measure", "corpus:m", "--fast"], capsys)
    assert code == 0
    for r in json.loads(out)["rows"]:
        if r["functional"] not in ("hardy_norm_sq", "full_norm_sq"):
            assert r["value"] == 0.0, r["functional"]


def test_byte_identical_reruns(tmp_path, capsys):
    for args in (["norms", "--function", "corpus:rand8_0", "--measure", "corpus:mix", "--fast"], ["lattice", "--eta", "0.8", "--measure", "corpus:delta0"]):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
    capsys.readouterr()


def test_decompose_and_synthesize(tmp_path, capsys):
    out = tmp_path / "dec.json"
    code, _, _ = run(["decompose", "--function", "corpus:z", "--measure", "corpus:m", "--eta", "0.6", "--out", str(out)], capsys)
    assert code == 0
    d = json.loads(out.read_text())
    assert d["decomposition"]["diagnostics"]["converged"]
    assert "seconds" not in d["decomposition"]["diagnostics"]
    code, syn, err = run(["synthesize", "--input", str(out)], capsys)
    assert code == 0 and "reconstruction residual" in err
    assert json.loads(syn)["reconstruction_residual"] < 1e-2


def test_decompose_failures(tmp_path, capsys):
    out = tmp_path / "fail.json"
    code, _, err = run(["decompose", "--function", "corpus:z", "--measure", "corpus:m", "--eta", "0.6", "--max-terms", "1", "--out", str(out)], capsys)
    assert code == 1 and "tol" in err
    assert json.loads(out.read_text())["failure"] == "not_converged"
    code, _, err = run(["decompose", "--function", "corpus:z", "--measure", "corpus:m", "--eta", "0.6", "--b", "2"], capsys)
    assert code == 2 and "exceed 2" in err
    code, _, err = run(["decompose", "--function", "corpus:z", "--measure", "corpus:m"], capsys)
    assert code == 2 and "--eta" in err


def test_synthesize_missing(tmp_path, capsys):
    code, _, err = run(["synthesize", "--input", str(tmp_path / "none.json")], capsys)
    assert code == 2 and "cannot read" in err


def test_schur_failure_manifest(capsys):
    code, out, err = run(["schur", "--kernel", "L", "--alpha", "0.2", "--measure", "corpus:delta0", "--exponent", "0.25"], capsys)
    assert code == 1 and "no Schur certificate" in err
    d = json.loads(out)
    assert d["failure"] == "not_certified" and d["certificate"]["witness"]["family"] == 2


def test_probe(capsys):
    code, out, _ = run(["probe", "--lemma", "4.2", "--param", "t=0", "--param", "s=1"], capsys)
    assert code == 0 and json.loads(out)["probe"]["constant"] > 0
    code, _, err = run(["probe", "--lemma", "3.1", "--param", "s=0", "--param", "r=1", "--param", "t=1"], capsys)
    assert code == 2 and "t < s + 2 < r" in err
    code, _, err = run(["probe", "--lemma", "4.2", "--param", "t=0"], capsys)
    assert code == 2 and "needs parameter s" in err


def test_dblint_and_mo(capsys):
    code, out, _ = run(["dblint", "--function", "corpus:z", "--measure", "corpus:m", "--nr", "16", "--ntheta", "64"], capsys)
    assert code == 0 and json.loads(out)["value"] > 0
    code, out, _ = run(["mo", "--function", "corpus:z", "--measure", "corpus:m", "--point", "0.3"], capsys)
    assert code == 0
    pw = json.loads(out)["pointwise"][0]
    assert pw["mo_r"] <= pw["mo"] + 1e-12


def test_verify(capsys):
    code, out, err = run(["verify", "calibration"], capsys)
    assert code == 0 and json.loads(out)["passed"]
    assert err.startswith("PASS")
    with pytest.raises(SystemExit) as exc:
        main(["verify", "no-such-suite"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_invalid_flags(capsys):
    code, _, err = run(["pmu", "--measure", "corpus:m", "--threads", "0"], capsys)
    assert code == 2 and "--threads" in err
    code, _, err = run(["lattice", "--eta", "1.5"], capsys)
    assert code == 2 and "--eta" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "dirichlet_spaces", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()
