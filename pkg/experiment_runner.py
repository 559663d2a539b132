"""
experiment_runner.py

ExperimentRunner: turns a validated ExperimentConfig into a run directory of
CSV tables, JSON verdicts, SVG plots and a manifest.

Workflow of a run:
1. Resolve output directory, seed and threads (CLI > config > environment)
2. Dispatch on the experiment kind to one run_* method
3. Each stage is timed; tables and verdicts are written as they are produced
4. The manifest is written last, listing every file and the pass/fail summary
"""

import logging
import math
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from dotenv import load_dotenv
from scipy import special

from lab_config import EnvSettings, ExperimentConfig, load_config, parse_complex
from lab_errors import LabError, PreconditionError, QuadratureError
from operator_assembly import (
    assemble_banded,
    assemble_step_decomposition,
    assemble_toeplitz,
    banded_minus_toeplitz,
    radial_moments_for,
)
from radial_moments import (
    MomentQuery,
    diag_entry,
    moment_asymptotic,
    moment_quadrature,
    moment_quadrature_rdomain,
    moment_table,
    power_weight_moment,
)
from results_store import ResultsStore, RunReport
from spectra import (
    counting_profile,
    default_index_window,
    eigen_signed,
    fit_limit,
    gamma_functionals,
    scaled_sequence,
    schatten_norm,
    singular_values,
    sturm_count,
    tridiagonal_eigenvalues,
)
from symbol_model import (
    ConstantFactor,
    RadialProfile,
    SeparableSymbol,
    StepFunction,
    lp_norm_angular,
    pos_neg_parts,
    sup_norm_angular,
)
import theory_checks as checks

logger = logging.getLogger(__name__)

RDOMAIN_LIMIT = 10 ** 5
DIFFERENCE_LIMIT = 512
# trend window [16, N/4] of the difference diagnostic, at least 8 indices wide
DIFFERENCE_START = 16
DIFFERENCE_SPAN = 8


def _in_band(value: float, target: float, low: float, high: float) -> bool:
    return low * target <= value <= high * target


def difference_window(N: int) -> Optional[Tuple[int, int]]:
    """Index window of the banded-minus-Toeplitz trend, or None when N is too small."""
    hi = min(N, DIFFERENCE_LIMIT) // 4
    if hi < DIFFERENCE_START + DIFFERENCE_SPAN:
        return None
    return DIFFERENCE_START, hi


class ExperimentRunner:
    """
    Runs one experiment per call to ``run``.

    Progress messages go to the module logger and, when set, to a callback
    taking (message, level).
    """

    CONFIGS_DIR = Path(__file__).parent / "configs"
    ICONS = {
        "info": "ℹ️",
        "success": "✅",
        "warning": "⚠️",
        "error": "❌",
        "stage": "🔄",
        "file": "📁",
        "check": "🔧",
    }

    def __init__(self, output_root: Optional[str] = None, threads: Optional[int] = None,
                 seed: Optional[int] = None):
        """
        Args:
            output_root: overrides the config's output directory
            threads: overrides the config's worker count
            seed: overrides the config's seed
        """
        load_dotenv()
        self.env = EnvSettings.from_env()
        self.output_root = output_root
        self.threads = threads
        self.seed = seed
        self._progress_callback: Optional[Callable[[str, str], None]] = None

    def set_progress_callback(self, callback: Callable[[str, str], None]) -> None:
        """
        Args:
            callback: function taking (message, level); level is one of the ICONS keys.
        """
        self._progress_callback = callback

    def _emit_progress(self, message: str, level: str = "info") -> None:
        icon = self.ICONS.get(level, "•")
        log_level = {"error": logging.ERROR, "warning": logging.WARNING}.get(level, logging.INFO)
        logger.log(log_level, "%s %s", icon, message)
        if self._progress_callback:
            self._progress_callback(message, level)

    @contextmanager
    def _stage(self, report: RunReport, name: str) -> Iterator[None]:
        self._emit_progress(f"[{report.name}] {name}...", "stage")
        start = time.perf_counter()
        try:
            yield
        finally:
            report.timings[name] = report.timings.get(name, 0.0) + time.perf_counter() - start

    def _load_config(self, ref: Union[str, Path]) -> ExperimentConfig:
        """A path, or the name of a bundled config under configs/."""
        path = Path(ref)
        if not path.exists() and not path.suffix:
            path = self.CONFIGS_DIR / f"{ref}.json"
        return load_config(path)

    # ------------------------------------------------------------------
    # Dispatch
    # ------------------------------------------------------------------

    def run(self, config: Union[ExperimentConfig, str, Path]) -> RunReport:
        if not isinstance(config, ExperimentConfig):
            config = self._load_config(config)
        config = config.with_overrides(self.output_root, self.seed, self.threads).resolved(self.env)

        run_dir = Path(config.output_dir) / config.name
        report = RunReport(config.name, config.kind, config.to_dict(), run_dir)
        store = ResultsStore(report)
        handler = getattr(self, "run_" + config.kind.split("-")[0])

        self._emit_progress(f"Starting {config.kind} run '{config.name}' -> {run_dir}", "info")
        store.write_json("config.json", config.to_dict())
        try:
            handler(config, report, store)
        except LabError as exc:
            report.errors.append(f"{type(exc).__name__}: {exc}")
            self._emit_progress(f"{type(exc).__name__}: {exc}", "error")

        store.finalize()
        for f in report.files:
            logger.debug("%s %s", self.ICONS["file"], run_dir / f)
        level = "success" if report.passed else "error"
        self._emit_progress(
            f"Run '{report.name}' {'passed' if report.passed else 'failed'} "
            f"({len(report.verdicts)} verdicts, {len(report.files)} files)", level)
        return report

    def _record(self, report: RunReport, verdict: checks.CheckVerdict) -> None:
        report.add_verdict(verdict.to_dict())
        mark = "passed" if verdict.passed else "FAILED"
        self._emit_progress(f"   {verdict.check}: {mark}", "check" if verdict.passed else "warning")

    # ------------------------------------------------------------------
    # Radial diagonal and moment asymptotics
    # ------------------------------------------------------------------

    def run_radial(self, config: ExperimentConfig, report: RunReport, store: ResultsStore) -> None:
        gamma = config.gamma
        radial = config.build_radial()
        g1 = radial.profile.limit
        rows: List[List[Any]] = []
        with self._stage(report, "diagonal entries"):
            for n in sorted(config.n_grid):
                asymptote = g1 / math.log(2 * n + 1) ** gamma if n > 0 or gamma == 0.0 else float("nan")
                try:
                    value = diag_entry(n, gamma, radial.profile)
                except QuadratureError as exc:
                    rows.append([n, None, asymptote, None, f"error: {exc}"])
                    continue
                rows.append([n, value, asymptote, value / asymptote, "ok"])
        store.write_csv("radial_diagonal.csv", ["n", "diag_entry", "asymptote", "ratio", "status"], rows)

        if config.params.get("moment_table"):
            with self._stage(report, "moment table"):
                table = moment_table(int(config.params["moment_table"]), radial, workers=config.threads)
            store.write_moment_table("moments.csv", table, gamma)

        good = [r for r in rows if r[4] == "ok" and r[3] is not None and math.isfinite(r[3])]
        deviations = np.array([abs(r[3] - 1.0) for r in good])
        exact = deviations.size > 0 and float(deviations.max()) <= 1e-9
        monotone = deviations.size > 1 and bool(np.all(np.diff(deviations) < 0.0))
        final = float(deviations[-1]) if deviations.size else float("inf")
        tol = config.tolerances["ratio_tol"]
        self._record(report, checks.CheckVerdict(
            "radial_ratio",
            {"gamma": gamma, "n_grid": sorted(config.n_grid), "profile": radial.profile.describe(), "ratio_tol": tol},
            None,
            len(good) == len(rows) and (exact or monotone) and final <= tol,
            {"ratios": [r[3] for r in good], "monotone": monotone, "exact": exact, "final_deviation": final},
        ))
        report.summary.update({"final_ratio": good[-1][3] if good else None, "gamma": gamma})

        if good:
            store.write_svg(
                "radial_ratio.svg",
                lambda ax: (ax.semilogx([r[0] for r in good], [r[3] for r in good], "o-", label="ratio"),
                            ax.axhline(1.0, color="grey", linestyle="--")),
                title=f"diag entry * log(2n+1)^{gamma:g}", xlabel="n", ylabel="ratio",
            )

    def run_watson(self, config: ExperimentConfig, report: RunReport, store: ResultsStore) -> None:
        gammas = config.gammas or [config.gamma]
        profiles = config.profiles or ["one"]
        tol = config.tolerances["ratio_tol"]
        rows: List[List[Any]] = []
        curves: Dict[str, Tuple[List[int], List[float]]] = {}
        with self._stage(report, "moments"):
            for gamma in gammas:
                for kind in profiles:
                    profile = RadialProfile(kind)
                    label = f"gamma={gamma:g}, g={kind}"
                    ns: List[int] = []
                    devs: List[float] = []
                    for n in sorted(config.n_grid):
                        q = MomentQuery(n, gamma, profile)
                        quad = moment_quadrature(q)
                        asym = moment_asymptotic(q)
                        rdomain = moment_quadrature_rdomain(q).value if n <= RDOMAIN_LIMIT else None
                        ratio = quad.value / asym.value
                        rows.append([gamma, kind, n, quad.value, quad.error_estimate, asym.value,
                                     asym.error_estimate, ratio, rdomain, quad.converged])
                        if quad.converged:
                            ns.append(n)
                            devs.append(abs(ratio - 1.0))
                    curves[label] = (ns, devs)
                    decreasing = len(devs) > 1 and all(b < a for a, b in zip(devs, devs[1:]))
                    self._record(report, checks.CheckVerdict(
                        "watson_ratio",
                        {"gamma": gamma, "profile": kind, "n_grid": sorted(config.n_grid), "ratio_tol": tol},
                        None,
                        len(ns) == len(config.n_grid) and decreasing and devs[-1] <= tol,
                        {"deviations": devs, "decreasing": decreasing},
                    ))
        store.write_csv(
            "watson.csv",
            ["gamma", "profile", "n", "quadrature", "quadrature_error", "asymptotic", "asymptotic_error",
             "ratio", "rdomain", "converged"],
            rows,
        )

        def draw(ax):
            for label, (ns, devs) in curves.items():
                if ns:
                    ax.loglog(ns, devs, "o-", label=label)

        store.write_svg("watson_deviation.svg", draw, title="|quadrature / asymptotic - 1|",
                        xlabel="n", ylabel="deviation")
        report.summary["curves"] = len(curves)

    # ------------------------------------------------------------------
    # Singular value asymptotics of T_phi
    # ------------------------------------------------------------------

    def run_theorem1(self, config: ExperimentConfig, report: RunReport, store: ResultsStore) -> None:
        sym = config.build_symbol()
        N, gamma, workers = config.N, config.gamma, config.threads
        with self._stage(report, "assembly"):
            truncation = assemble_toeplitz(sym, N, workers)
        if config.params.get("export_matrix"):
            store.write_matrix("matrix.lsm", truncation.entries, gamma, truncation.symbol_meta)
            if N <= 64:
                store.write_matrix_csv("matrix.csv", truncation.entries)

        if gamma == 0.0:
            self._identity_fixture(sym, truncation.entries, report)
            return

        with self._stage(report, "spectrum"):
            values = singular_values(truncation).values
        store.write_spectrum("singular_values.csv", values, gamma)

        window = config.fit_window() or default_index_window(N)
        target = abs(sym.radial.g_limit) * sup_norm_angular(sym.angular)
        with self._stage(report, "fit"):
            fit = fit_limit(values, gamma, window)
            functionals = gamma_functionals(values, gamma)
            grid = np.geomspace(values[window[1] - 1], values[window[0] - 1], 64)
            profile = counting_profile(values, gamma, grid)
        store.write_csv("counting_profile.csv", ["s", "n", "n_shifted", "scaled"], profile.rows())
        store.write_json("fit.json", {"fit": fit.to_dict(), "functionals": functionals.to_dict(),
                                      "target": target, "target_functional": target ** (1.0 / gamma)})

        low, high = config.tolerances["band_low"], config.tolerances["band_high"]
        in_band = _in_band(fit.c_hat, target, low, high) if config.params.get("fit_band", True) else True
        self._record(report, checks.CheckVerdict(
            "theorem1_fit",
            {"N": N, "gamma": gamma, "window": list(window), "band": [low * target, high * target]},
            None,
            in_band and fit.endpoint_increasing,
            {**fit.to_dict(), "target": target, "in_band": in_band},
        ))
        report.summary.update({"c_hat": fit.c_hat, "target": target, "c_affine": fit.c_affine,
                               "Delta_hat": functionals.Delta_hat, "delta_hat": functionals.delta_hat,
                               "operator_norm": schatten_norm(values, math.inf)})

        if isinstance(sym.angular, StepFunction) and config.params.get("arc_compare", True):
            self._arc_comparison(config, sym, fit.c_hat, fit.window, report, store)

        if config.params.get("stability"):
            with self._stage(report, "truncation stability"):
                self._record(report, checks.check_truncation_stability(
                    sym, int(config.params["stability"]), tolerance=config.tolerances["stability"],
                    workers=workers))

        n_hi = N // 8
        scaled = scaled_sequence(values[:n_hi], gamma)
        n = np.arange(1, n_hi + 1)

        def draw(ax):
            ax.semilogx(n, scaled, label="(log(n+1))^gamma s_n")
            ax.axhline(fit.c_hat, linestyle=":", label="c_hat")
            ax.axhline(target, color="grey", linestyle="--", label="target")
            ax.axvspan(window[0], window[1], alpha=0.1)

        store.write_svg("scaled_sequence.svg", draw, title=f"N={N}, gamma={gamma:g}", xlabel="n",
                        ylabel="scaled singular value")

    def _identity_fixture(self, sym: SeparableSymbol, entries: np.ndarray, report: RunReport) -> None:
        """gamma = 0 with constant data: T is a multiple of the identity."""
        if not isinstance(sym.angular, ConstantFactor) or sym.radial.profile.kind not in ("one", "constant") \
                or sym.radial.cutoff is not None:
            raise PreconditionError("gamma = 0 runs only the identity fixture (constant symbol and profile)")
        expected = complex(sym.angular.value) * sym.radial.profile.limit
        error = float(np.max(np.abs(entries - expected * np.eye(entries.shape[0]))))
        self._record(report, checks.CheckVerdict(
            "identity_fixture", {"N": entries.shape[0], "value": [expected.real, expected.imag]}, None,
            error <= 1e-12, {"max_abs_error": error}))
        report.summary["identity_error"] = error

    def _arc_comparison(self, config: ExperimentConfig, sym: SeparableSymbol, c_direct: float,
                        window: Tuple[int, int], report: RunReport, store: ResultsStore) -> None:
        step = sym.angular
        if step.pieces < 2:
            return
        try:
            with self._stage(report, "arc decomposition"):
                pairs = assemble_step_decomposition(step, sym.radial, config.N, config.threads)
                union = np.concatenate([abs(c) * singular_values(T).values for c, T in pairs])
                union = np.sort(union)[::-1]
                fit = fit_limit(union, config.gamma, window)
        except PreconditionError as exc:
            self._emit_progress(f"arc comparison skipped: {exc}", "warning")
            return
        change = abs(fit.c_hat / c_direct - 1.0)
        tol = config.tolerances["arc_change"]
        self._record(report, checks.CheckVerdict(
            "arc_decomposition",
            {"L": step.pieces, "window": list(window), "arc_change": tol},
            None,
            change <= tol,
            {"c_hat_direct": c_direct, "c_hat_arcs": fit.c_hat, "relative_change": change},
        ))
        store.write_spectrum("arc_union_singular_values.csv", union[:config.N], config.gamma)

    # ------------------------------------------------------------------
    # Signed eigenvalues
    # ------------------------------------------------------------------

    def run_signed(self, config: ExperimentConfig, report: RunReport, store: ResultsStore) -> None:
        sym = config.build_symbol()
        N, gamma = config.N, config.gamma
        positive_part, negative_part = pos_neg_parts(sym.angular)
        g1 = abs(sym.radial.g_limit)
        targets = {"positive": g1 * sup_norm_angular(positive_part),
                   "negative": g1 * sup_norm_angular(negative_part)}

        with self._stage(report, "assembly"):
            truncation = assemble_toeplitz(sym, N, config.threads)
        with self._stage(report, "eigenvalues"):
            signed = eigen_signed(truncation.entries)
        branches = {"positive": signed.positives, "negative": signed.negatives}
        low, high = config.tolerances["band_low"], config.tolerances["band_high"]

        for name, values in branches.items():
            store.write_spectrum(f"eigenvalues_{name}.csv", values, gamma)
            target = targets[name]
            if target == 0.0:
                peak = float(values[0]) if values.size else 0.0
                self._record(report, checks.CheckVerdict(
                    f"signed_{name}", {"N": N, "gamma": gamma, "target": 0.0}, None,
                    values.size == 0 or peak <= 1e-9 * max(1.0, targets["positive"] + targets["negative"]),
                    {"count": int(values.size), "largest": peak, "noise_floor": signed.noise_floor}))
                continue
            window = config.fit_window() or default_index_window(values.size)
            fit = fit_limit(values, gamma, window)
            self._record(report, checks.CheckVerdict(
                f"signed_{name}",
                {"N": N, "gamma": gamma, "target": target, "window": list(window)},
                None,
                _in_band(fit.c_hat, target, low, high),
                {**fit.to_dict(), "count": int(values.size)},
            ))
            report.summary[f"c_hat_{name}"] = fit.c_hat
        report.summary.update({f"target_{k}": v for k, v in targets.items()})

        def draw(ax):
            for name, values in branches.items():
                if values.size >= 8:
                    k = max(values.size // 8, 1)
                    ax.semilogx(np.arange(1, k + 1), scaled_sequence(values[:k], gamma), label=name)
                ax.axhline(targets[name], linestyle="--", color="grey")

        store.write_svg("signed_scaled.svg", draw, title="signed eigenvalue branches", xlabel="n",
                        ylabel="(log(n+1))^gamma lambda_n")

    # ------------------------------------------------------------------
    # Banded matrices
    # ------------------------------------------------------------------

    def run_banded(self, config: ExperimentConfig, report: RunReport, store: ResultsStore) -> None:
        params = config.params
        coeffs = [parse_complex(c) for c in params["coefficients"]]
        N, gamma = config.N, config.gamma
        banded = assemble_banded(N, coeffs, gamma, params.get("offset", 2), params.get("perturbation", "none"))
        target = banded.symbol().sup_norm()

        with self._stage(report, "spectrum"):
            method = "dense_svd"
            if banded.is_tridiagonal:
                try:
                    diag, off = banded.tridiagonal_parts()
                    method = "sturm_bisection"
                except PreconditionError as exc:
                    self._emit_progress(f"bisection path unavailable ({exc}), using the dense SVD", "warning")
            if method == "sturm_bisection":
                spectrum = tridiagonal_eigenvalues(diag, off)
            else:
                spectrum = singular_values(banded.to_dense())
        values = spectrum.values
        store.write_spectrum("banded_singular_values.csv", values, gamma)

        if method == "sturm_bisection":
            lam = spectrum.eigenvalues
            idx = sorted({max(min(int(q * N), N - 2), 0) for q in (0.1, 0.5, 0.9)}) if N > 1 else []
            midpoints = np.array([0.5 * (lam[i] + lam[i + 1]) for i in idx])
            counted = sturm_count(diag, off, midpoints)
            expected = np.array([i + 1 for i in idx])
            self._record(report, checks.CheckVerdict(
                "sturm_count", {"N": N, "points": midpoints.tolist()}, None,
                bool(np.all(counted == expected)),
                {"sturm": counted.tolist(), "bisection": expected.tolist()}))

        checkpoints = sorted(p for p in params.get("checkpoints", [100, 1000]) if p <= N)
        scaled = scaled_sequence(values, gamma)
        checkpoint_values = [float(scaled[p - 1]) for p in checkpoints]
        increasing = all(b >= a * (1.0 - 1e-12) for a, b in zip(checkpoint_values, checkpoint_values[1:]))
        low, high = config.tolerances["band_low"], config.tolerances["band_high"]
        last_in_band = bool(checkpoint_values) and _in_band(checkpoint_values[-1], target, low, high)
        self._record(report, checks.CheckVerdict(
            "banded_trend",
            {"N": N, "gamma": gamma, "coefficients": [[c.real, c.imag] for c in coeffs], "checkpoints": checkpoints,
             "band": [low * target, high * target], "method": method},
            None,
            increasing and last_in_band,
            {"scaled_at_checkpoints": checkpoint_values, "target": target, "increasing": increasing},
        ))
        report.summary.update({"target": target, "method": method,
                               "scaled_at_checkpoints": dict(zip(map(str, checkpoints), checkpoint_values))})

        h = banded.half_bandwidth
        if all(coeffs[j] == 0 for j in range(len(coeffs)) if j != h):
            analytic = np.sort(np.abs(banded.diagonal(0)))[::-1]
            error = float(np.max(np.abs(values - analytic)) / max(float(analytic[0]), 1e-300))
            self._record(report, checks.CheckVerdict(
                "diagonal_analytic", {"N": N, "c": [coeffs[h].real, coeffs[h].imag]}, None,
                error <= config.tolerances["diagonal_match"], {"max_rel_error": error}))

        if params.get("difference", True) and difference_window(N) is not None and gamma > 0.0:
            self._banded_difference(banded, report, store, config)

        k = max(N // 8, 1)
        n = np.arange(1, k + 1)

        def draw(ax):
            ax.semilogx(n, scaled[:k], label="(log(n+1))^gamma s_n")
            ax.axhline(target, linestyle="--", color="grey", label="sup |phi_1,b|")
            ax.plot(checkpoints, checkpoint_values, "o")

        store.write_svg("banded_scaled.svg", draw, title=f"banded N={N}", xlabel="n", ylabel="scaled value")

    def _banded_difference(self, banded, report: RunReport, store: ResultsStore,
                           config: ExperimentConfig) -> None:
        N_d = min(banded.N, DIFFERENCE_LIMIT)
        lo, hi = difference_window(N_d)
        with self._stage(report, "difference diagnostic"):
            diff = banded_minus_toeplitz(banded, N_d, config.threads)
            values = singular_values(diff).values
        scaled = scaled_sequence(values, config.gamma)[lo - 1:hi]
        start, end = float(scaled[0]), float(scaled[-1])
        store.write_spectrum("difference_singular_values.csv", values, config.gamma)
        self._record(report, checks.CheckVerdict(
            "banded_difference", {"N": N_d, "window": [lo, hi]}, None, end < start,
            {"scaled_start": start, "scaled_end": end, "ratio": end / start if start > 0 else None}))

    # ------------------------------------------------------------------
    # Asymptotic orthogonality
    # ------------------------------------------------------------------

    def run_ortho(self, config: ExperimentConfig, report: RunReport, store: ResultsStore) -> None:
        tol = config.tolerances
        L = int(config.params.get("L", 4))
        with self._stage(report, "cross terms"):
            result = checks.cross_term_diagnostic(
                L=L, gamma=config.gamma, N=config.N, window=config.fit_window(), workers=config.threads,
                hs_tolerance=tol["hs_change"], adjacent_decrease=tol["adjacent_decrease"],
                control_floor=tol["control_floor"])
        rows = []
        for p in result.pairs:
            trend = p.get("trend", {})
            rows.append([p["j"], p["k"], p["adjacent"], p["norm"], p["hs_norm"], p.get("hs_norm_2N"),
                         p.get("hs_rel_change"), trend.get("ratio")])
        store.write_csv("cross_terms.csv",
                        ["j", "k", "adjacent", "norm", "hs_norm", "hs_norm_2N", "hs_rel_change", "trend_ratio"],
                        rows)
        store.write_json("cross_terms.json", {"pairs": result.pairs, "control": result.control})
        self._record(report, result.verdict())
        report.summary.update({"control_ratio": result.control["ratio"], "pairs": len(result.pairs)})

        def draw(ax):
            ratios = [r[7] for r in rows if r[7] is not None]
            ax.bar(range(len(ratios)), ratios, label="adjacent pairs")
            ax.axhline(result.control["ratio"], color="grey", linestyle="--", label="self-product control")

        store.write_svg("cross_terms.svg", draw, title=f"L={L} window trend ratios", xlabel="pair",
                        ylabel="end / start")

    # ------------------------------------------------------------------
    # Property checks
    # ------------------------------------------------------------------

    def run_checks(self, config: ExperimentConfig, report: RunReport, store: ResultsStore) -> None:
        only = config.params.get("only") or list(checks_registry())
        for name in only:
            with self._stage(report, name):
                for verdict in checks_registry()[name](config):
                    self._record(report, verdict)
        store.write_json("verdicts.json", report.verdicts)
        report.summary["checks"] = len(report.verdicts)

    # ------------------------------------------------------------------
    # Power-weight comparison
    # ------------------------------------------------------------------

    def run_pushnitski(self, config: ExperimentConfig, report: RunReport, store: ResultsStore) -> None:
        gamma = config.gamma
        angular = config.build_angular()
        norm = lp_norm_angular(angular, 1.0 / gamma)
        constant = math.exp(special.gammaln(gamma + 1.0)) / 2.0 ** gamma
        target = constant * norm

        rows = []
        for n in sorted(n for n in config.n_grid if n >= 1):
            s_n = power_weight_moment(n - 1, gamma)
            scaled = n ** gamma * s_n
            rows.append([n, s_n, scaled, constant, abs(scaled / constant - 1.0)])
        store.write_csv("power_weight_diagonal.csv", ["n", "s_n", "n_gamma_s_n", "target", "rel_error"], rows)
        final = rows[-1][4] if rows else float("inf")
        self._record(report, checks.CheckVerdict(
            "pushnitski_diagonal", {"gamma": gamma, "n_grid": [r[0] for r in rows],
                                    "rel_tol": config.tolerances["rel_tol"]},
            None, final <= config.tolerances["rel_tol"], {"final_rel_error": final, "target": constant}))
        report.summary.update({"constant": constant, "lp_norm": norm, "target": target})

        if config.N is not None:
            sym = config.build_symbol()
            with self._stage(report, "assembly"):
                moments = radial_moments_for(sym.radial, config.N, config.threads)
                values = singular_values(assemble_toeplitz(sym, config.N, config.threads, moments)).values
            lo, hi = max(8, config.N // 16), config.N // 8
            n = np.arange(lo, hi + 1)
            window_values = n ** gamma * values[n - 1]
            estimate = float(np.median(window_values))
            rel = abs(estimate / target - 1.0) if target > 0 else float("inf")
            store.write_spectrum("power_weight_singular_values.csv", values)
            self._record(report, checks.CheckVerdict(
                "pushnitski_assembled", {"N": config.N, "gamma": gamma, "window": [lo, hi],
                                         "assembled_rel_tol": config.tolerances["assembled_rel_tol"]},
                None, rel <= config.tolerances["assembled_rel_tol"],
                {"estimate": estimate, "target": target, "rel_error": rel}))
            report.summary["assembled_estimate"] = estimate

        if rows:
            store.write_svg(
                "power_weight.svg",
                lambda ax: (ax.semilogx([r[0] for r in rows], [r[2] for r in rows], "o-", label="n^gamma s_n"),
                            ax.axhline(constant, color="grey", linestyle="--", label="Gamma(gamma+1)/2^gamma")),
                title=f"power weight, gamma={gamma:g}", xlabel="n", ylabel="n^gamma s_n",
            )


# ---------------------------------------------------------------------------
# Check registry for run_checks
# ---------------------------------------------------------------------------


def _opts(config: ExperimentConfig, name: str) -> Dict[str, Any]:
    return dict(config.params.get(name, {}) or {})


def _log_decay(config: ExperimentConfig) -> List[checks.CheckVerdict]:
    o = _opts(config, "log_decay_functionals")
    cases = o.get("cases", [[1.0, 1.0], [2.0, 1.0], [1.0, 2.0]])
    return [checks.check_log_decay_functionals(C, g, int(o.get("length", 10 ** 6)), config.tolerances["log_decay"])
            for C, g in cases]


def _counting(config: ExperimentConfig) -> List[checks.CheckVerdict]:
    o = _opts(config, "counting_equivalence")
    return [checks.check_counting_equivalence(config.gamma, int(o.get("length", 10 ** 6)))]


def _p1(config: ExperimentConfig) -> List[checks.CheckVerdict]:
    o = _opts(config, "p1_subadditivity")
    g, tol = config.gamma, config.tolerances["estimator"]
    long_a = checks.SyntheticOperator.log_decay(int(o.get("length", 10 ** 5)), 1.0, g)
    long_b = checks.SyntheticOperator.log_decay(len(long_a), 2.0, g)
    short = int(o.get("unitary_length", 512))
    short_a = checks.SyntheticOperator.log_decay(short, 1.0, g)
    short_b = checks.SyntheticOperator.log_decay(short, 2.0, g)
    return [
        checks.check_p1_subadditivity(long_a, long_b, g, "aligned", config.seed, tol),
        checks.check_p1_subadditivity(short_a, short_b, g, "common_unitary", config.seed, tol),
        checks.check_p1_subadditivity(short_a, short_b, g, "random_unitary", config.seed, tol),
    ]


def _p2(config: ExperimentConfig) -> List[checks.CheckVerdict]:
    o = _opts(config, "p2_kyfan")
    length, g = int(o.get("length", 10 ** 5)), config.gamma
    A = checks.SyntheticOperator.log_decay(length, 1.0, g)
    return [
        checks.check_p2_kyfan(A, checks.SyntheticOperator.log_decay(length, 1.0, 3.0 * g), g, config.seed,
                              config.tolerances["estimator"]),
        checks.check_p2_kyfan(A, checks.SyntheticOperator.exponential(length), g, config.seed,
                              config.tolerances["estimator"]),
    ]


def _p3(config: ExperimentConfig) -> List[checks.CheckVerdict]:
    o = _opts(config, "p3_products")
    length, g = int(o.get("length", 10 ** 5)), config.gamma
    A = checks.SyntheticOperator.log_decay(length, 1.0, g)
    B = checks.SyntheticOperator.log_decay(length, 2.0, g)
    return [checks.check_p3_products(A, B, g, config.tolerances["estimator"])]


def _p4(config: ExperimentConfig) -> List[checks.CheckVerdict]:
    o = _opts(config, "p4_blocks")
    return [checks.check_p4_random(int(o.get("families", 100)), int(o.get("max_L", 4)), int(o.get("max_dim", 8)),
                                   config.seed)]


def _lemma44(config: ExperimentConfig) -> List[checks.CheckVerdict]:
    o = _opts(config, "lemma44")
    return [checks.check_lemma44(tuple(o.get("l_values", (2, 3, 4, 5))), int(o.get("samples", 100_000)),
                                 config.seed)]


def _psi0(config: ExperimentConfig) -> List[checks.CheckVerdict]:
    o = _opts(config, "psi0_bound")
    return [checks.check_psi0_bound(config.gamma or 1.0, int(o.get("samples", 10_000)), config.seed,
                                    bool(o.get("printed_form", False)))]


def _weyl(config: ExperimentConfig) -> List[checks.CheckVerdict]:
    o = _opts(config, "weyl_inequalities")
    return [checks.check_weyl_inequalities(int(o.get("pairs", 100)), int(o.get("max_dim", 16)), config.seed)]


def _jacobi(config: ExperimentConfig) -> List[checks.CheckVerdict]:
    o = _opts(config, "jacobi_oracle")
    return [checks.check_jacobi_oracle(int(o.get("matrices", 20)), int(o.get("max_dim", 12)), config.seed)]


def _compact(config: ExperimentConfig) -> List[checks.CheckVerdict]:
    o = _opts(config, "compact_support_decay")
    return [checks.check_compact_support_decay(
        float(o.get("delta", 0.5)), int(o.get("N", 128)), config.gamma or 1.0, int(o.get("L", 1)),
        margin=config.tolerances["decay_margin"], workers=config.threads)]


def _stability(config: ExperimentConfig) -> List[checks.CheckVerdict]:
    o = _opts(config, "truncation_stability")
    return [checks.check_truncation_stability(
        config.build_symbol(), int(o.get("N", config.N or 256)), int(o.get("count", 64)),
        config.tolerances["stability"], config.threads)]


def checks_registry() -> Dict[str, Callable[[ExperimentConfig], Sequence[checks.CheckVerdict]]]:
    return {
        "log_decay_functionals": _log_decay,
        "counting_equivalence": _counting,
        "p1_subadditivity": _p1,
        "p2_kyfan": _p2,
        "p3_products": _p3,
        "p4_blocks": _p4,
        "lemma44": _lemma44,
        "psi0_bound": _psi0,
        "weyl_inequalities": _weyl,
        "jacobi_oracle": _jacobi,
        "compact_support_decay": _compact,
        "truncation_stability": _stability,
    }
