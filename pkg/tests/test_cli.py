import csv
import io
import json

import pytest

from ccx import acceptance
from ccx.cli import main
from ccx.field import evaluate
from ccx.io import load_field


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_generate_and_norm(tmp_path, capsys):
    path = tmp_path / "m.json"
    code, out, _ = run(capsys, "generate", "moser", "--alpha", "80", "--out", str(path))
    assert code == 0 and json.loads(out)["file"] == str(path)
    code, out, _ = run(capsys, "norm", str(path), "--which", "orlicz")
    assert code == 0
    rec = json.loads(out)
    assert rec["values"]["orlicz"] == pytest.approx(0.283783, abs=1e-5)
    assert len(rec["manifest"]["config_hash"]) == 16


def test_generate_default_name(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _, _ = run(capsys, "generate", "flattening", "--a", "4")
    assert code == 0 and (tmp_path / "flattening.json").exists()
    assert evaluate(load_field(tmp_path / "flattening.json"), (0.0, 0.0)) == pytest.approx(0.25)


def test_matrix_echo_and_violation(tmp_path, capsys):
    code, out, _ = run(capsys, "generate", "matrix", "--alpha", "40", "--A", "7.389,0,0,7.389",
                       "--out", str(tmp_path / "a.json"))
    assert code == 0 and json.loads(out)["echo"]["a"] == pytest.approx(0.05, abs=1e-3)
    code, _, err = run(capsys, "generate", "matrix", "--alpha", "40", "--A", "100,0,0,1",
                       "--out", str(tmp_path / "b.json"))
    assert code == 2 and "matrix2" in err


def test_region_norm_needs_radius(tmp_path, capsys):
    path = tmp_path / "m.json"
    run(capsys, "generate", "moser", "--alpha", "10", "--out", str(path))
    code, _, err = run(capsys, "norm", str(path), "--which", "orlicz-region")
    assert code == 2 and "--radius" in err
    code, out, _ = run(capsys, "norm", str(path), "--which", "orlicz-region", "--radius", "2.0")
    assert code == 0 and json.loads(out)["values"]["orlicz"] == pytest.approx(0.302988, abs=1e-5)


def test_missing_file(tmp_path, capsys):
    code, _, _ = run(capsys, "norm", str(tmp_path / "nope.json"))
    assert code == 2


def test_bad_family_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["generate", "nosuch"])
    assert exc.value.code == 2


def test_extract(tmp_path, capsys):
    path = tmp_path / "m.json"
    run(capsys, "generate", "moser", "--alpha", "80", "--out", str(path))
    code, out, _ = run(capsys, "extract", str(path))
    rep = json.loads(out)
    assert code == 0 and len(rep["triplets"]) == 1
    assert rep["triplets"][0]["alpha"] == pytest.approx(80, rel=1e-3)


def test_extract_unwritable_output(tmp_path, capsys):
    path = tmp_path / "m.json"
    run(capsys, "generate", "moser", "--alpha", "20", "--out", str(path))
    code, _, _ = run(capsys, "extract", str(path), "--out", str(tmp_path / "missing" / "r.json"))
    assert code == 3


def test_byte_identical(tmp_path, capsys):
    outs = []
    p, n = tmp_path / "f.json", tmp_path / "n.json"
    for _ in range(2):
        run(capsys, "generate", "two_scale_sum", "--alpha", "20", "--beta", "160", "--a", "1", "--b", "0.5",
            "--core", "0.3,0", "--out", str(p))
        code, _, _ = run(capsys, "norm", str(p), "--which", "orlicz", "--out", str(n))
        assert code == 0
        outs.append((p.read_bytes(), n.read_bytes()))
    assert outs[0] == outs[1]


def test_sweep_csv(tmp_path, capsys):
    code, out, _ = run(capsys, "sweep", "moser", "--alpha", "10,20", "--threads", "2")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["alpha"]) for r in rows] == [10.0, 20.0]
    assert float(rows[0]["orlicz"]) == pytest.approx(0.302988, abs=1e-5)
    assert set(rows[0]) >= {"orlicz", "l2", "energy", "config_hash", "quad_profile"}


def test_sweep_threads_do_not_change_output(capsys):
    _, one, _ = run(capsys, "sweep", "translated", "--alpha", "80", "--a", "0,1", "--threads", "1")
    _, two, _ = run(capsys, "sweep", "translated", "--alpha", "80", "--a", "0,1", "--threads", "2")
    assert one == two


def test_sweep_empty_range(capsys):
    code, _, err = run(capsys, "sweep", "moser", "--alpha", "")
    assert code == 2 and "empty range" in err


def test_verify_pass(tmp_path, capsys):
    out_path = tmp_path / "v.json"
    code, out, _ = run(capsys, "verify", "capacity", "--out", str(out_path))
    assert code == 0 and "3/3 passed" in out
    assert all(c["passed"] for c in json.loads(out_path.read_text())["checks"])


def test_verify_fail_exit_code(capsys, monkeypatch):
    def failing():
        return acceptance.Check("tiny", "always fails", False, "never", {"x": 0.0})

    monkeypatch.setitem(acceptance.CHECKS, "tiny", failing)
    monkeypatch.setitem(acceptance.SUITES, "tiny", ["tiny"])
    code, out, _ = run(capsys, "verify", "tiny")
    assert code == 1 and out.startswith("FAIL tiny") and "0/1 passed" in out
