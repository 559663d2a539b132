"""
results_store.py

Output files of a run: CSV tables, JSON verdicts, SVG plots, matrix dumps, and
the manifest the acceptance suite reads.

All files are written atomically (temporary file in the same directory, then
os.replace). CSV and JSON contain no timings or timestamps so that a run
repeated with the same config and seed reproduces them byte for byte; stage
timings go to run.log.

Matrix binary layout (.lsm):

    bytes 0..7     magic b"LOGSPEC1"
    bytes 8..15    header length H, unsigned 64-bit little-endian
    next H bytes   UTF-8 JSON header {"N", "gamma", "symbol", "dtype": "<c16", "order": "C"}
    remainder      N*N complex128 little-endian values, row-major
"""

import csv
import hashlib
import io
import json
import logging
import math
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from lab_errors import DomainError, LabError  # noqa: E402
from radial_moments import MomentResult  # noqa: E402

logger = logging.getLogger(__name__)

MATRIX_MAGIC = b"LOGSPEC1"
MATRIX_CSV_LIMIT = 64
MANIFEST_NAME = "manifest.json"
RUN_LOG_NAME = "run.log"
SVG_HASH_SALT = "logspec-lab"


def _json_safe(obj: Any) -> Any:
    """numpy scalars/arrays to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [_json_safe(obj.real), _json_safe(obj.imag)]
    if isinstance(obj, Path):
        return obj.as_posix()
    return obj


def _csv_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    if isinstance(value, (complex, np.complexfloating)):
        return repr(complex(value))
    if value is None:
        return ""
    return str(value)


@dataclass
class RunReport:
    """In-memory record of one experiment run."""

    name: str
    kind: str
    config: Dict[str, Any]
    run_dir: Path
    files: List[str] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    verdicts: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    errors: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.errors and all(v.get("pass", False) for v in self.verdicts)

    def add_verdict(self, record: Dict[str, Any]) -> None:
        self.verdicts.append(_json_safe(record))

    def manifest(self, digests: Dict[str, str]) -> Dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "config": _json_safe(self.config),
            "files": [{"path": f, "sha256": digests.get(f)} for f in sorted(self.files)],
            "pass": self.passed,
            "summary": _json_safe(self.summary),
            "verdicts": self.verdicts,
            "errors": list(self.errors),
        }


class ResultsStore:
    """Writes the artifacts of one run below ``run_dir`` and records them on the report."""

    def __init__(self, report: RunReport):
        self.report = report
        self.run_dir = Path(report.run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)

    # -- primitives ---------------------------------------------------------

    def _atomic_write(self, name: str, data: bytes) -> Path:
        target = self.run_dir / name
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(data)
            os.replace(tmp, target)
        except OSError:
            Path(tmp).unlink(missing_ok=True)
            raise
        if name not in self.report.files and name not in (MANIFEST_NAME, RUN_LOG_NAME):
            self.report.files.append(name)
        logger.debug("wrote %s (%d bytes)", target, len(data))
        return target

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        """RFC-4180 CSV with CRLF line endings; floats in shortest round-trip form."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])
        return self._atomic_write(name, buf.getvalue().encode("utf-8"))

    def write_json(self, name: str, payload: Any) -> Path:
        text = json.dumps(_json_safe(payload), indent=2, sort_keys=True, allow_nan=False)
        return self._atomic_write(name, (text + "\n").encode("utf-8"))

    def write_svg(self, name: str, draw: Callable[[Any], None], title: str = "",
                  xlabel: str = "", ylabel: str = "") -> Path:
        """Static line plot; the SVG id salt and missing date keep the file reproducible."""
        with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
            fig, ax = plt.subplots(figsize=(6.4, 4.0))
            try:
                draw(ax)
                ax.set_title(title)
                ax.set_xlabel(xlabel)
                ax.set_ylabel(ylabel)
                ax.grid(True, alpha=0.3)
                if ax.get_legend_handles_labels()[0]:
                    ax.legend()
                buf = io.BytesIO()
                fig.savefig(buf, format="svg", metadata={"Date": None})
            finally:
                plt.close(fig)
        return self._atomic_write(name, buf.getvalue())

    # -- domain tables ------------------------------------------------------

    def write_spectrum(self, name: str, values: Sequence[float], gamma: Optional[float] = None,
                       index_base: int = 1) -> Path:
        values = np.asarray(values, dtype=float)
        n = np.arange(values.size) + index_base
        if gamma is None:
            return self.write_csv(name, ["index", "value"], zip(n, values))
        scaled = np.log(n + 1.0) ** gamma * values
        return self.write_csv(name, ["index", "value", "scaled"], zip(n, values, scaled))

    def write_moment_table(self, name: str, results: Sequence[MomentResult], gamma: float,
                           first: int = 0) -> Path:
        rows = (r.as_row(first + i, gamma) for i, r in enumerate(results))
        return self.write_csv(name, ["n", "gamma", "value", "method", "error_estimate"], rows)

    def write_matrix(self, name: str, entries: np.ndarray, gamma: float, symbol: Dict[str, Any]) -> Path:
        entries = np.ascontiguousarray(entries, dtype="<c16")
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DomainError(f"matrix export needs a square matrix, got shape {entries.shape}")
        header = json.dumps(_json_safe({"N": entries.shape[0], "gamma": gamma, "symbol": symbol,
                                        "dtype": "<c16", "order": "C"}), sort_keys=True).encode("utf-8")
        blob = MATRIX_MAGIC + struct.pack("<Q", len(header)) + header + entries.tobytes(order="C")
        return self._atomic_write(name, blob)

    def write_matrix_csv(self, name: str, entries: np.ndarray) -> Path:
        N = entries.shape[0]
        if N > MATRIX_CSV_LIMIT:
            raise DomainError(f"matrix CSV export limited to N <= {MATRIX_CSV_LIMIT}, got {N}")
        rows = ((m, n, entries[m, n].real, entries[m, n].imag) for m in range(N) for n in range(N))
        return self.write_csv(name, ["row", "col", "re", "im"], rows)

    # -- run completion -----------------------------------------------------

    def _digest(self, name: str) -> Optional[str]:
        path = self.run_dir / name
        if not path.exists():
            return None
        return hashlib.sha256(path.read_bytes()).hexdigest()

    def finalize(self) -> Path:
        """Write run.log (timings) and manifest.json; returns the manifest path."""
        report = self.report
        missing = [f for f in report.files if not (self.run_dir / f).exists()]
        if missing:
            report.errors.append(f"manifest lists missing files: {missing}")
        lines = [f"run {report.name} ({report.kind})"]
        lines += [f"stage {stage}: {seconds:.3f}s" for stage, seconds in report.timings.items()]
        lines += [f"error: {e}" for e in report.errors]
        lines.append(f"pass: {report.passed}")
        self._atomic_write(RUN_LOG_NAME, ("\n".join(lines) + "\n").encode("utf-8"))
        digests = {f: self._digest(f) for f in report.files}
        return self.write_json_manifest(report.manifest(digests))

    def write_json_manifest(self, manifest: Dict[str, Any]) -> Path:
        text = json.dumps(manifest, indent=2, sort_keys=True, allow_nan=False)
        return self._atomic_write(MANIFEST_NAME, (text + "\n").encode("utf-8"))


def read_matrix(path: Path) -> Tuple[Dict[str, Any], np.ndarray]:
    data = Path(path).read_bytes()
    if data[:8] != MATRIX_MAGIC:
        raise LabError(f"{path} is not a matrix dump (bad magic)")
    (length,) = struct.unpack("<Q", data[8:16])
    header = json.loads(data[16:16 + length].decode("utf-8"))
    N = int(header["N"])
    body = np.frombuffer(data[16 + length:], dtype="<c16")
    if body.size != N * N:
        raise LabError(f"{path}: expected {N * N} entries, found {body.size}")
    return header, body.reshape(N, N)


def load_manifest(run_dir: Path) -> Dict[str, Any]:
    path = Path(run_dir) / MANIFEST_NAME
    if not path.exists():
        raise LabError(f"no manifest in {run_dir}")
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def generate_report(manifest: Dict[str, Any]) -> str:
    """Plain-text summary of a manifest."""
    lines = [
        "=" * 60,
        f"RUN: {manifest.get('name')} [{manifest.get('kind')}]",
        "=" * 60,
        f"Status: {'PASS' if manifest.get('pass') else 'FAIL'}",
        f"Files: {len(manifest.get('files', []))}",
    ]
    for verdict in manifest.get("verdicts", []):
        mark = "ok " if verdict.get("pass") else "FAIL"
        lines.append(f"  [{mark}] {verdict.get('check')}")
    for key, value in sorted(manifest.get("summary", {}).items()):
        if not isinstance(value, (dict, list)):
            lines.append(f"  {key}: {value}")
    for error in manifest.get("errors", []):
        lines.append(f"  error: {error}")
    lines.append("=" * 60)
    return "\n".join(lines)
