import json

import pytest

from acceptance_suite import ACCEPTANCE_DIR, AcceptanceSuite
from experiment_runner import ExperimentRunner
from results_store import load_manifest


def _write(directory, name, data):
    path = directory / name
    path.write_text(json.dumps({"schema_version": 1, **data}), encoding="utf-8")
    return path


@pytest.fixture
def suite_dir(tmp_path):
    configs = tmp_path / "configs"
    configs.mkdir()
    _write(configs, "01.json", {"kind": "pushnitski-compare", "name": "pw", "n_grid": [10, 1000]})
    _write(configs, "02.json", {"kind": "theorem1", "name": "identity", "gamma": 0.0, "N": 16})
    _write(configs, "03.json", {"kind": "checks", "name": "heavy_one", "params": {"only": ["lemma44"]},
                                "tags": ["heavy"]})
    return configs


def test_quick_suite_skips_heavy(tmp_path, suite_dir):
    suite = AcceptanceSuite(ExperimentRunner(output_root=str(tmp_path / "out"), seed=0), suite_dir)
    result = suite.run(quick=True)
    assert result["status"] == "OK", result
    by_name = {c["criterion"]: c for c in result["criteria"]}
    assert by_name["heavy_one"]["skipped"] and by_name["heavy_one"]["pass"] is None
    assert by_name["identity"]["pass"] and by_name["pw"]["pass"]
    saved = suite.save_result(result, tmp_path / "out" / "acceptance_result.json")
    assert json.loads(saved.read_text(encoding="utf-8"))["status"] == "OK"


def test_invalid_config_stops_before_running(tmp_path, suite_dir):
    _write(suite_dir, "04.json", {"kind": "theorem1", "N": 4})
    suite = AcceptanceSuite(ExperimentRunner(output_root=str(tmp_path / "out")), suite_dir)
    result = suite.run()
    assert result["failed_stage"] == "validate"
    assert not (tmp_path / "out").exists()


def test_failed_criterion_is_reported(tmp_path, suite_dir):
    _write(suite_dir, "05.json", {"kind": "theorem1", "name": "broken", "gamma": 0.0, "N": 16,
                                  "symbol": {"type": "trig", "coefficients": [1, 2, 1]}})
    suite = AcceptanceSuite(ExperimentRunner(output_root=str(tmp_path / "out")), suite_dir)
    result = suite.run(quick=True)
    assert result["status"] == "ERROR"
    assert result["failed_stage"] == "criteria"
    assert {c["criterion"]: c["pass"] for c in result["criteria"]}["broken"] is False


def test_empty_directory(tmp_path):
    result = AcceptanceSuite(ExperimentRunner(output_root=str(tmp_path)), tmp_path).run()
    assert result["failed_stage"] == "validate"


def _bundled(tag_filter):
    paths = sorted(ACCEPTANCE_DIR.glob("*.json"))
    return [p for p in paths if tag_filter("heavy" in json.loads(p.read_text(encoding="utf-8")).get("tags", []))]


@pytest.mark.parametrize("path", _bundled(lambda heavy: not heavy), ids=lambda p: p.stem)
def test_bundled_criterion(tmp_path, path):
    report = ExperimentRunner(output_root=str(tmp_path)).run(path)
    failed = [v for v in report.verdicts if not v["pass"]]
    assert report.passed, failed or report.errors
    assert load_manifest(report.run_dir)["pass"] is True


@pytest.mark.slow
def test_bundled_acceptance_quick(tmp_path):
    suite = AcceptanceSuite(ExperimentRunner(output_root=str(tmp_path)), ACCEPTANCE_DIR)
    result = suite.run(quick=True)
    failed = [c for c in result["criteria"] if c["pass"] is False]
    assert result["status"] == "OK", failed or result["errors"]
