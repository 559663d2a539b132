"""
acceptance_suite.py

The acceptance battery: runs every bundled config under configs/acceptance and
decides pass/fail from the written manifests only.

Stages:
1. Validate all configs before anything is computed
2. Run each config (``quick`` skips the ones tagged "heavy")
3. Read the manifests back and collect one criterion record per config
"""

import json
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from lab_config import ExperimentConfig, load_config, validate_files
from lab_errors import LabError
from experiment_runner import ExperimentRunner
from results_store import load_manifest

ACCEPTANCE_DIR = Path(__file__).parent / "configs" / "acceptance"
HEAVY_TAG = "heavy"


class AcceptanceSuite:
    """Runs the acceptance configs through an ExperimentRunner."""

    def __init__(self, runner: Optional[ExperimentRunner] = None, configs_dir: Path = ACCEPTANCE_DIR):
        self.runner = runner or ExperimentRunner()
        self.configs_dir = Path(configs_dir)

    def config_paths(self) -> List[Path]:
        return sorted(self.configs_dir.glob("*.json"))

    def run(self, quick: bool = False) -> Dict[str, Any]:
        result: Dict[str, Any] = {
            "status": "OK",
            "errors": [],
            "timestamp": datetime.now().isoformat(),
            "criteria": [],
            "failed_stage": None,
        }
        emit = self.runner._emit_progress

        emit("Stage 1: validating acceptance configs", "stage")
        paths = self.config_paths()
        if not paths:
            result.update(status="ERROR", errors=[f"no configs in {self.configs_dir}"], failed_stage="validate")
            return result
        problems = {p: issues for p, issues in validate_files(paths).items() if issues}
        if problems:
            result["status"] = "ERROR"
            result["errors"] = [f"{p}: {'; '.join(issues)}" for p, issues in problems.items()]
            result["failed_stage"] = "validate"
            emit(f"{len(problems)} invalid config(s)", "error")
            return result

        emit("Stage 2: running experiments", "stage")
        configs: List[ExperimentConfig] = [load_config(p) for p in paths]
        run_dirs: Dict[str, Path] = {}
        for idx, config in enumerate(configs, start=1):
            if quick and HEAVY_TAG in config.tags:
                emit(f"[{idx}/{len(configs)}] {config.name}: skipped (heavy)", "info")
                result["criteria"].append({"criterion": config.name, "pass": None, "skipped": True})
                continue
            emit(f"[{idx}/{len(configs)}] {config.name}", "info")
            try:
                report = self.runner.run(config)
                run_dirs[config.name] = report.run_dir
            except LabError as exc:
                result["errors"].append(f"{config.name}: {exc}")

        emit("Stage 3: reading manifests", "stage")
        for name, run_dir in run_dirs.items():
            try:
                manifest = load_manifest(run_dir)
            except LabError as exc:
                result["errors"].append(f"{name}: {exc}")
                continue
            failed = [v.get("check") for v in manifest.get("verdicts", []) if not v.get("pass")]
            result["criteria"].append({
                "criterion": name,
                "pass": bool(manifest.get("pass")),
                "skipped": False,
                "failed_checks": failed,
                "run_dir": Path(run_dir).as_posix(),
            })

        result["criteria"].sort(key=lambda c: c["criterion"])
        if result["errors"] or any(c["pass"] is False for c in result["criteria"]):
            result["status"] = "ERROR"
            result["failed_stage"] = "criteria"
        passed = sum(1 for c in result["criteria"] if c["pass"])
        emit(f"Acceptance: {passed}/{len(result['criteria'])} criteria passed",
             "success" if result["status"] == "OK" else "error")
        return result

    def save_result(self, result: Dict[str, Any], path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(result, f, indent=2, ensure_ascii=False)
        return path
