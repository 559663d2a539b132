import hashlib
import json

import numpy as np
import pytest

from lab_errors import DomainError, LabError
from radial_moments import MomentResult
from results_store import ResultsStore, RunReport, generate_report, load_manifest, read_matrix


@pytest.fixture
def store(tmp_path):
    report = RunReport("demo", "theorem1", {"kind": "theorem1"}, tmp_path / "demo")
    return ResultsStore(report)


def test_csv_is_crlf_with_round_trip_floats(store):
    path = store.write_csv("t.csv", ["a", "b", "ok"], [[0.1, 2, True], [float("nan"), None, False]])
    raw = path.read_bytes()
    assert raw == b"a,b,ok\r\n0.1,2,true\r\nnan,,false\r\n"
    assert store.report.files == ["t.csv"]


def test_json_is_sorted_and_null_for_non_finite(store):
    path = store.write_json("v.json", {"b": np.float64(np.inf), "a": np.arange(2), "c": 1 + 2j})
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload == {"a": [0, 1], "b": None, "c": [1.0, 2.0]}
    assert path.read_text(encoding="utf-8").index('"a"') < path.read_text(encoding="utf-8").index('"b"')


def test_spectrum_scaled_column(store):
    path = store.write_spectrum("s.csv", [2.0, 1.0], gamma=1.0)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "index,value,scaled"
    assert lines[1].split(",")[:2] == ["1", "2.0"]
    assert float(lines[2].split(",")[2]) == pytest.approx(np.log(3.0))


def test_moment_table_rows(store):
    path = store.write_moment_table("m.csv", [MomentResult(1.0, "exact", 0.0), MomentResult(0.5, "exact", 0.0)], 0.0)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "n,gamma,value,method,error_estimate"
    assert lines[2] == "1,0.0,0.5,exact,0.0"


def test_matrix_round_trip(store):
    rng = np.random.default_rng(1)
    A = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    path = store.write_matrix("a.lsm", A, 1.0, {"type": "test"})
    assert path.read_bytes()[:8] == b"LOGSPEC1"
    header, B = read_matrix(path)
    assert header["N"] == 5 and header["dtype"] == "<c16" and header["order"] == "C"
    assert np.array_equal(A, B)


def test_matrix_export_guards(store, tmp_path):
    with pytest.raises(DomainError):
        store.write_matrix("bad.lsm", np.ones((2, 3)), 1.0, {})
    with pytest.raises(DomainError):
        store.write_matrix_csv("big.csv", np.eye(65))
    bogus = tmp_path / "bogus.lsm"
    bogus.write_bytes(b"NOTMAGIC" + bytes(16))
    with pytest.raises(LabError):
        read_matrix(bogus)


def test_svg_is_reproducible(store):
    draw = lambda ax: ax.plot([1, 2, 3], [3, 1, 2], label="line")
    first = store.write_svg("p.svg", draw, title="t").read_bytes()
    second = store.write_svg("p.svg", draw, title="t").read_bytes()
    assert first == second
    assert b"<svg" in first
    assert store.report.files.count("p.svg") == 1


def test_finalize_writes_manifest_with_digests(store):
    store.write_csv("t.csv", ["x"], [[1]])
    store.report.add_verdict({"check": "demo", "pass": np.bool_(True), "metrics": {"v": np.float64(1.5)}})
    store.report.timings["stage"] = 0.25
    store.finalize()
    manifest = load_manifest(store.run_dir)
    assert manifest["pass"] is True
    assert [f["path"] for f in manifest["files"]] == ["t.csv"]
    digest = hashlib.sha256((store.run_dir / "t.csv").read_bytes()).hexdigest()
    assert manifest["files"][0]["sha256"] == digest
    assert "0.25" not in json.dumps(manifest)
    assert "stage stage" in (store.run_dir / "run.log").read_text(encoding="utf-8")
    text = generate_report(manifest)
    assert "PASS" in text and "demo" in text


def test_errors_fail_the_run(store):
    store.report.errors.append("boom")
    store.finalize()
    assert load_manifest(store.run_dir)["pass"] is False


def test_missing_files_are_reported(store):
    path = store.write_csv("gone.csv", ["x"], [])
    path.unlink()
    store.finalize()
    assert any("missing" in e for e in load_manifest(store.run_dir)["errors"])


def test_load_manifest_missing(tmp_path):
    with pytest.raises(LabError):
        load_manifest(tmp_path)
