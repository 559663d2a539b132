"""
lab_config.py

Experiment configuration: the versioned JSON schema, range validation and the
environment defaults (.env) shared by the CLI and the runner.

A config is a flat JSON object:

    {
      "schema_version": 1,
      "kind": "theorem1",
      "symbol": {"type": "trig", "coefficients": [0.5, 2.0, 0.5]},
      "gamma": 1.0,
      "N": 4096,
      "window": [32, 512]
    }

Every problem found is collected and reported together in one ConfigError.
"""

import json
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from lab_errors import ConfigError, LabError
from operator_assembly import DENSE_LIMIT, PERTURBATIONS
from spectra import STURM_LIMIT
from symbol_model import (
    PROFILE_KINDS,
    SAMPLED_PRESETS,
    AngularFactor,
    ConstantFactor,
    RadialProfile,
    RadialWeight,
    SampledContinuous,
    SeparableSymbol,
    StepFunction,
    TrigPolynomial,
)

SCHEMA_VERSION = 1

EXPERIMENT_KINDS = (
    "radial",
    "theorem1",
    "signed",
    "banded",
    "ortho",
    "checks",
    "watson",
    "pushnitski-compare",
)

CHECK_NAMES = (
    "log_decay_functionals",
    "counting_equivalence",
    "p1_subadditivity",
    "p2_kyfan",
    "p3_products",
    "p4_blocks",
    "lemma44",
    "psi0_bound",
    "weyl_inequalities",
    "jacobi_oracle",
    "compact_support_decay",
    "truncation_stability",
)

# Bands are multiples of the theoretical target.
DEFAULT_TOLERANCES: Dict[str, Dict[str, float]] = {
    "radial": {"ratio_tol": 0.15},
    "watson": {"ratio_tol": 0.2},
    "theorem1": {"band_low": 0.4, "band_high": 1.2, "arc_change": 0.10, "stability": 0.01},
    "signed": {"band_low": 0.3, "band_high": 1.25},
    "banded": {"band_low": 0.5, "band_high": 1.125, "diagonal_match": 1e-10},
    "ortho": {"hs_change": 0.10, "adjacent_decrease": 0.25, "control_floor": 0.5},
    "checks": {"estimator": 0.10, "log_decay": 0.05, "product": 1e-12, "spectral": 1e-10,
               "stability": 0.01, "decay_margin": 0.10},
    "pushnitski-compare": {"rel_tol": 0.02, "assembled_rel_tol": 0.15},
}

CONFIG_KEYS = (
    "schema_version", "kind", "name", "symbol", "radial", "gamma", "N", "n_grid", "gammas",
    "profiles", "window", "seed", "output_dir", "threads", "tolerances", "params", "tags",
)

SYMBOL_TYPES = ("constant", "trig", "step", "step_uniform", "sampled")
MAX_MOMENT_POWER = 10 ** 8
MIN_DIMENSION = 16


# ---------------------------------------------------------------------------
# Environment defaults
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnvSettings:
    """Defaults read from the environment (and .env once load_dotenv has run)."""

    output_dir: str = "./output"
    threads: int = 1
    seed: int = 20240
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "EnvSettings":
        problems: List[str] = []

        def _int(name: str, default: int) -> int:
            raw = os.getenv(name)
            if raw is None or raw.strip() == "":
                return default
            try:
                return int(raw)
            except ValueError:
                problems.append(f"{name}={raw!r} is not an integer")
                return default

        settings = cls(
            output_dir=os.getenv("LOGSPEC_OUTPUT_DIR") or cls.output_dir,
            threads=_int("LOGSPEC_THREADS", cls.threads),
            seed=_int("LOGSPEC_SEED", cls.seed),
            log_level=(os.getenv("LOGSPEC_LOG_LEVEL") or cls.log_level).upper(),
        )
        if settings.threads < 1:
            problems.append(f"LOGSPEC_THREADS must be >= 1, got {settings.threads}")
        if problems:
            raise ConfigError(problems, source="environment")
        return settings


# ---------------------------------------------------------------------------
# Symbol specs
# ---------------------------------------------------------------------------


def parse_complex(value: Any) -> complex:
    """A JSON number or a [re, im] pair."""
    if isinstance(value, bool):
        raise ValueError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return complex(float(value))
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(float(value[0]), float(value[1]))
    raise ValueError(f"expected a number or [re, im], got {value!r}")


def parse_angular(spec: Dict[str, Any]) -> AngularFactor:
    """Build the angular factor from its tagged spec; raises ValueError/LabError on bad input."""
    if not isinstance(spec, dict):
        raise ValueError("symbol must be an object")
    kind = spec.get("type")
    allowed = {
        "constant": {"type", "value"},
        "trig": {"type", "coefficients"},
        "step": {"type", "breakpoints", "values"},
        "step_uniform": {"type", "values", "start"},
        "sampled": {"type", "values", "preset", "grid"},
    }
    if kind not in allowed:
        raise ValueError(f"symbol type must be one of {SYMBOL_TYPES}, got {kind!r}")
    unknown = set(spec) - allowed[kind]
    if unknown:
        raise ValueError(f"unknown keys for symbol type '{kind}': {sorted(unknown)}")

    if kind == "constant":
        return ConstantFactor(parse_complex(spec.get("value", 1.0)))
    if kind == "trig":
        coeffs = spec.get("coefficients")
        if not isinstance(coeffs, list) or len(coeffs) % 2 != 1:
            raise ValueError("trig coefficients must be a list b_{-N}..b_N of odd length")
        return TrigPolynomial(tuple(parse_complex(c) for c in coeffs))
    if kind == "step":
        values = [parse_complex(v) for v in spec.get("values", [])]
        return StepFunction(tuple(float(b) for b in spec.get("breakpoints", [])), tuple(values))
    if kind == "step_uniform":
        values = [parse_complex(v) for v in spec.get("values", [])]
        if not values:
            raise ValueError("step_uniform needs at least one value")
        return StepFunction.uniform(values, float(spec.get("start", 0.0)))

    if ("values" in spec) == ("preset" in spec):
        raise ValueError("sampled symbol needs exactly one of 'values' or 'preset'")
    if "preset" in spec:
        if spec["preset"] not in SAMPLED_PRESETS:
            raise ValueError(f"unknown preset {spec['preset']!r}, expected one of {sorted(SAMPLED_PRESETS)}")
        return SampledContinuous.preset(spec["preset"], int(spec.get("grid", 4096)))
    return SampledContinuous(tuple(parse_complex(v) for v in spec["values"]))


def parse_radial(gamma: float, spec: Optional[Dict[str, Any]]) -> RadialWeight:
    spec = spec or {}
    unknown = set(spec) - {"profile", "profile_value", "weight", "cutoff"}
    if unknown:
        raise ValueError(f"unknown radial keys: {sorted(unknown)}")
    profile = RadialProfile(spec.get("profile", "one"), float(spec.get("profile_value", 1.0)))
    return RadialWeight(gamma, profile, spec.get("weight", "log"), spec.get("cutoff"))


# ---------------------------------------------------------------------------
# ExperimentConfig
# ---------------------------------------------------------------------------


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


@dataclass
class ExperimentConfig:
    kind: str
    schema_version: int = SCHEMA_VERSION
    name: str = ""
    symbol: Dict[str, Any] = field(default_factory=lambda: {"type": "constant", "value": 1.0})
    radial: Dict[str, Any] = field(default_factory=dict)
    gamma: float = 1.0
    N: Optional[int] = None
    n_grid: List[int] = field(default_factory=list)
    gammas: List[float] = field(default_factory=list)
    profiles: List[str] = field(default_factory=list)
    window: Optional[List[int]] = None
    seed: Optional[int] = None
    output_dir: Optional[str] = None
    threads: Optional[int] = None
    tolerances: Dict[str, float] = field(default_factory=dict)
    params: Dict[str, Any] = field(default_factory=dict)
    tags: List[str] = field(default_factory=list)
    source: Optional[str] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        problems = self._validate()
        if problems:
            raise ConfigError(problems, source=self.source)
        merged = dict(DEFAULT_TOLERANCES[self.kind])
        merged.update({k: float(v) for k, v in self.tolerances.items()})
        self.tolerances = merged
        if not self.name:
            self.name = self.kind

    # -- validation ---------------------------------------------------------

    def _validate(self) -> List[str]:
        problems: List[str] = []
        if self.schema_version != SCHEMA_VERSION:
            problems.append(f"schema_version must be {SCHEMA_VERSION}, got {self.schema_version!r}")
        if self.kind not in EXPERIMENT_KINDS:
            problems.append(f"kind must be one of {EXPERIMENT_KINDS}, got {self.kind!r}")
            return problems

        if not _is_number(self.gamma) or self.gamma < 0.0:
            problems.append(f"gamma must be a finite number >= 0, got {self.gamma!r}")
        if self.N is not None and (not _is_int(self.N) or self.N < MIN_DIMENSION):
            problems.append(f"N must be an integer >= {MIN_DIMENSION}, got {self.N!r}")
        if self.seed is not None and (not _is_int(self.seed) or self.seed < 0):
            problems.append(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.threads is not None and (not _is_int(self.threads) or self.threads < 1):
            problems.append(f"threads must be an integer >= 1, got {self.threads!r}")
        if not all(_is_int(n) and 0 <= n < MAX_MOMENT_POWER for n in self.n_grid):
            problems.append(f"n_grid entries must be integers in [0, {MAX_MOMENT_POWER})")
        if not all(_is_number(g) and g > 0.0 for g in self.gammas):
            problems.append("gammas entries must be positive numbers")
        bad_profiles = [p for p in self.profiles if p not in PROFILE_KINDS]
        if bad_profiles:
            problems.append(f"unknown profiles {bad_profiles}, expected among {PROFILE_KINDS}")
        if self.window is not None:
            if (not isinstance(self.window, (list, tuple)) or len(self.window) != 2
                    or not all(_is_int(w) for w in self.window) or not 1 <= self.window[0] < self.window[1]):
                problems.append(f"window must be [n_lo, n_hi] with 1 <= n_lo < n_hi, got {self.window!r}")
        unknown_tol = set(self.tolerances) - set(DEFAULT_TOLERANCES[self.kind])
        if unknown_tol:
            problems.append(f"unknown tolerances for '{self.kind}': {sorted(unknown_tol)}")
        for key, value in self.tolerances.items():
            if not _is_number(value) or value < 0.0:
                problems.append(f"tolerance {key} must be a non-negative number, got {value!r}")
        if not isinstance(self.params, dict):
            problems.append("params must be an object")
            return problems

        if not problems:
            try:
                self.build_symbol()
            except (ValueError, TypeError, LabError) as exc:
                problems.append(f"symbol: {exc}")
        problems.extend(getattr(self, f"_validate_{self.kind.replace('-', '_')}")())
        return problems

    def _require_N(self, limit: int) -> List[str]:
        if self.N is None:
            return ["N is required for this experiment"]
        if _is_int(self.N) and self.N > limit:
            return [f"N={self.N} exceeds the budget {limit}"]
        if self.symbol.get("type") == "sampled" and _is_int(self.N):
            grid = len(self.symbol["values"]) if "values" in self.symbol else self.symbol.get("grid", 4096)
            if grid < 4 * self.N:
                return [f"sampled grid {grid} too coarse for N={self.N}; needs >= {4 * self.N}"]
        return []

    def _validate_radial(self) -> List[str]:
        problems = [] if self.n_grid else ["n_grid must list at least one index"]
        if self.radial.get("cutoff") is not None:
            problems.append("radial experiments compare against g(1) and do not take a cutoff")
        table = self.params.get("moment_table", 0)
        if not _is_int(table) or not 0 <= table <= 2 * DENSE_LIMIT:
            problems.append(f"params.moment_table must be an integer in [0, {2 * DENSE_LIMIT}]")
        return problems

    def _validate_watson(self) -> List[str]:
        problems = self._validate_radial()
        if any(_is_int(n) and n < 2 for n in self.n_grid):
            problems.append("watson n_grid entries must be >= 2")
        if self.gamma <= 0.0 and not self.gammas:
            problems.append("watson needs gamma > 0")
        return problems

    def _validate_theorem1(self) -> List[str]:
        problems = self._require_N(DENSE_LIMIT)
        if self.window is not None and self.N is not None and _is_int(self.N) and self.window[1] > self.N // 8:
            problems.append(f"window end {self.window[1]} exceeds N/8 = {self.N // 8}")
        stability = self.params.get("stability")
        if stability is not None and (not _is_int(stability) or not 64 <= 2 * stability <= DENSE_LIMIT):
            problems.append(f"params.stability must be an integer N_s with 64 <= 2 N_s <= {DENSE_LIMIT}")
        unknown = set(self.params) - {"stability", "arc_compare", "export_matrix", "fit_band"}
        if unknown:
            problems.append(f"unknown theorem1 params: {sorted(unknown)}")
        return problems

    def _validate_signed(self) -> List[str]:
        return self._require_N(DENSE_LIMIT)

    def _validate_banded(self) -> List[str]:
        coeffs = self.params.get("coefficients")
        if not isinstance(coeffs, list) or len(coeffs) % 2 != 1:
            return ["params.coefficients must be a list b_{-h}..b_h of odd length"]
        problems = self._require_N(STURM_LIMIT if len(coeffs) <= 3 else DENSE_LIMIT)
        try:
            [parse_complex(c) for c in coeffs]
        except ValueError as exc:
            problems.append(f"params.coefficients: {exc}")
        if self.params.get("perturbation", "none") not in PERTURBATIONS:
            problems.append(f"params.perturbation must be one of {PERTURBATIONS}")
        offset = self.params.get("offset", 2)
        if not _is_int(offset) or offset < 2:
            problems.append(f"params.offset must be an integer >= 2, got {offset!r}")
        checkpoints = self.params.get("checkpoints", [100, 1000])
        if not isinstance(checkpoints, list) or not all(_is_int(p) and p >= 1 for p in checkpoints):
            problems.append("params.checkpoints must be a list of positive integers")
        return problems

    def _validate_ortho(self) -> List[str]:
        problems = self._require_N(DENSE_LIMIT // 2)
        L = self.params.get("L", 4)
        if not _is_int(L) or L < 3:
            problems.append(f"params.L must be an integer >= 3, got {L!r}")
        return problems

    def _validate_checks(self) -> List[str]:
        problems: List[str] = []
        only = self.params.get("only", list(CHECK_NAMES))
        if not isinstance(only, list) or not set(only) <= set(CHECK_NAMES):
            problems.append(f"params.only must be a subset of {CHECK_NAMES}")
        unknown = set(self.params) - set(CHECK_NAMES) - {"only"}
        if unknown:
            problems.append(f"unknown checks params: {sorted(unknown)}")
        for name in set(self.params) & set(CHECK_NAMES):
            if not isinstance(self.params[name], dict):
                problems.append(f"params.{name} must be an object of options")
        return problems

    def _validate_pushnitski_compare(self) -> List[str]:
        problems = [] if self.n_grid else ["n_grid must list at least one index"]
        if self.gamma <= 0.0:
            problems.append("pushnitski-compare needs gamma > 0")
        if self.N is not None:
            problems.extend(self._require_N(DENSE_LIMIT))
        return problems

    # -- builders -----------------------------------------------------------

    def build_angular(self) -> AngularFactor:
        return parse_angular(self.symbol)

    def build_radial(self, gamma: Optional[float] = None) -> RadialWeight:
        spec = dict(self.radial)
        if self.kind == "pushnitski-compare":
            spec.setdefault("weight", "power")
        return parse_radial(self.gamma if gamma is None else gamma, spec)

    def build_symbol(self) -> SeparableSymbol:
        return SeparableSymbol(self.build_angular(), self.build_radial())

    def fit_window(self) -> Optional[tuple]:
        return tuple(self.window) if self.window is not None else None

    def with_overrides(self, output_dir: Optional[str] = None, seed: Optional[int] = None,
                       threads: Optional[int] = None) -> "ExperimentConfig":
        """CLI values win over config values."""
        changes: Dict[str, Any] = {}
        if output_dir is not None:
            changes["output_dir"] = output_dir
        if seed is not None:
            changes["seed"] = seed
        if threads is not None:
            changes["threads"] = threads
        return replace(self, **changes) if changes else self

    def resolved(self, env: Optional[EnvSettings] = None) -> "ExperimentConfig":
        """Fill output_dir, seed and threads left unset from the environment."""
        env = env or EnvSettings.from_env()
        return replace(
            self,
            output_dir=self.output_dir if self.output_dir is not None else env.output_dir,
            seed=self.seed if self.seed is not None else env.seed,
            threads=self.threads if self.threads is not None else env.threads,
        )

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out.pop("source", None)
        return out


def config_from_dict(data: Dict[str, Any], source: Optional[str] = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError(["config must be a JSON object"], source=source)
    unknown = sorted(set(data) - set(CONFIG_KEYS))
    problems = [f"unknown key '{k}'" for k in unknown]
    if "kind" not in data:
        problems.append("missing required key 'kind'")
    if "schema_version" not in data:
        problems.append("missing required key 'schema_version'")
    if problems:
        raise ConfigError(problems, source=source)
    try:
        return ExperimentConfig(**data, source=source)
    except TypeError as exc:
        raise ConfigError([str(exc)], source=source) from exc


def load_config(path: Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"file not found: {path}"], source=str(path))
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"invalid JSON: {exc}"], source=str(path)) from exc
    return config_from_dict(data, source=str(path))


def validate_files(paths: Sequence[Path]) -> Dict[str, List[str]]:
    """Problems per file; an empty list means the file is valid."""
    report: Dict[str, List[str]] = {}
    for path in paths:
        try:
            load_config(path)
            report[str(path)] = []
        except ConfigError as exc:
            report[str(path)] = exc.problems
    return report
