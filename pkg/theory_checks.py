"""
theory_checks.py

Numerical property checks for the operator-class calculus and the asymptotic
orthogonality of arc pieces. Each check is a pure function of its parameters
and seed and returns a CheckVerdict whose dict form is the JSON record
{check, params, seed, pass, metrics}.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import unitary_group

from lab_errors import DomainError, WindowError
from operator_assembly import (
    BlockFamily,
    DENSE_LIMIT,
    assemble_arc_family,
    assemble_toeplitz,
    block_diagonal,
    block_embed_products,
)
from spectra import (
    counting,
    gamma_functionals,
    hilbert_schmidt_norm,
    jacobi_eigenvalues,
    scaled_sequence,
    singular_values,
)
from symbol_model import ArcPartition, RadialWeight, SeparableSymbol

logger = logging.getLogger(__name__)

ESTIMATOR_TOL = 0.10
MIN_ESTIMATOR_LENGTH = 16


@dataclass
class CheckVerdict:
    check: str
    params: Dict[str, Any]
    seed: Optional[int]
    passed: bool
    metrics: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "check": self.check,
            "params": self.params,
            "seed": self.seed,
            "pass": bool(self.passed),
            "metrics": self.metrics,
        }


@dataclass(frozen=True, eq=False)
class SyntheticOperator:
    """A decreasing non-negative sequence standing for a diagonal compact operator."""

    values: np.ndarray
    label: str = "synthetic"

    def __post_init__(self):
        v = np.sort(np.abs(np.asarray(self.values, dtype=float)))[::-1]
        object.__setattr__(self, "values", v)

    @classmethod
    def log_decay(cls, length: int, C: float = 1.0, gamma: float = 1.0) -> "SyntheticOperator":
        """s_n = C / (log(n+1))^gamma for n = 1..length."""
        n = np.arange(1, length + 1, dtype=float)
        return cls(C / np.log(n + 1.0) ** gamma, f"log_decay(C={C}, gamma={gamma})")

    @classmethod
    def exponential(cls, length: int, base: float = 2.0) -> "SyntheticOperator":
        """s_n = base^{-n} for n = 1..length."""
        n = np.arange(1, length + 1, dtype=float)
        return cls(base ** (-n), f"exponential(base={base})")

    @classmethod
    def finite_rank(cls, length: int, rank: int, norm: float) -> "SyntheticOperator":
        v = np.zeros(length)
        v[:rank] = norm
        return cls(v, f"finite_rank(rank={rank}, norm={norm})")

    @classmethod
    def zero(cls, length: int) -> "SyntheticOperator":
        return cls(np.zeros(length), "zero")

    def diagonal(self) -> np.ndarray:
        return np.diag(self.values)

    def __len__(self) -> int:
        return self.values.size


def _functionals(values: np.ndarray, gamma: float) -> Tuple[float, float]:
    """(Delta_hat, delta_hat); zero for sequences too short to estimate after dropping zeros."""
    positive = values[values > 0.0]
    if positive.size < MIN_ESTIMATOR_LENGTH:
        return 0.0, 0.0
    est = gamma_functionals(positive, gamma)
    return est.Delta_hat, est.delta_hat


def _unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    return unitary_group.rvs(n, random_state=rng) if n > 1 else np.ones((1, 1), dtype=complex)


# ---------------------------------------------------------------------------
# Sigma_gamma calculus
# ---------------------------------------------------------------------------

P1_MODES = ("aligned", "common_unitary", "random_unitary")
UNITARY_LIMIT = 1024


def check_p1_subadditivity(seq_a: SyntheticOperator, seq_b: SyntheticOperator, gamma: float,
                           mode: str = "aligned", seed: Optional[int] = None,
                           tolerance: float = ESTIMATOR_TOL) -> CheckVerdict:
    """(Delta(A+B))^{g/(1+g)} <= Delta(A)^{g/(1+g)} + Delta(B)^{g/(1+g)} up to ``tolerance``."""
    if mode not in P1_MODES:
        raise DomainError(f"unknown mode '{mode}', expected one of {P1_MODES}")
    if len(seq_a) != len(seq_b):
        raise DomainError("sequences must have equal length")
    a, b = seq_a.values, seq_b.values
    if mode == "aligned":
        total = a + b
    else:
        if len(a) > UNITARY_LIMIT:
            raise DomainError(f"unitary modes limited to length {UNITARY_LIMIT}")
        rng = np.random.default_rng(seed)
        U = _unitary(rng, len(a))
        V = U if mode == "common_unitary" else _unitary(rng, len(a))
        A = (U * a) @ U.conj().T
        B = (V * b) @ V.conj().T
        total = singular_values(A + B).values

    exponent = gamma / (1.0 + gamma)
    d_a, _ = _functionals(a, gamma)
    d_b, _ = _functionals(b, gamma)
    d_sum, _ = _functionals(total, gamma)
    lhs = d_sum ** exponent
    rhs = d_a ** exponent + d_b ** exponent
    return CheckVerdict(
        check="p1_subadditivity",
        params={"gamma": gamma, "mode": mode, "length": len(a), "A": seq_a.label, "B": seq_b.label,
                "tolerance": tolerance},
        seed=seed,
        passed=lhs <= (1.0 + tolerance) * rhs + 1e-15,
        metrics={"Delta_A": d_a, "Delta_B": d_b, "Delta_sum": d_sum, "lhs": lhs, "rhs": rhs},
    )


def check_p2_kyfan(seq_a: SyntheticOperator, seq_b: SyntheticOperator, gamma: float,
                   seed: Optional[int] = None, tolerance: float = ESTIMATOR_TOL) -> CheckVerdict:
    """
    Delta and delta of A + B equal those of A when B is in Sigma^0_gamma.

    B is placed on the diagonal of A under a seeded random permutation.
    """
    if len(seq_a) != len(seq_b):
        raise DomainError("sequences must have equal length")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(seq_b))
    total = np.abs(seq_a.values + seq_b.values[perm])
    D_a, d_a = _functionals(seq_a.values, gamma)
    D_s, d_s = _functionals(total, gamma)
    rel_upper = abs(D_s / D_a - 1.0) if D_a > 0 else abs(D_s)
    rel_lower = abs(d_s / d_a - 1.0) if d_a > 0 else abs(d_s)
    return CheckVerdict(
        check="p2_kyfan",
        params={"gamma": gamma, "length": len(seq_a), "A": seq_a.label, "B": seq_b.label,
                "tolerance": tolerance},
        seed=seed,
        passed=rel_upper <= tolerance and rel_lower <= tolerance,
        metrics={"Delta_A": D_a, "delta_A": d_a, "Delta_sum": D_s, "delta_sum": d_s,
                 "rel_change_Delta": rel_upper, "rel_change_delta": rel_lower},
    )


def check_p3_products(seq_a: SyntheticOperator, seq_b: SyntheticOperator, gamma: float,
                      tolerance: float = ESTIMATOR_TOL, vanishing_level: float = 0.05) -> CheckVerdict:
    """Delta_{2 gamma}(AB) <= Delta_gamma(A) + Delta_gamma(B) for commuting diagonal A, B."""
    if len(seq_a) != len(seq_b):
        raise DomainError("sequences must have equal length")
    product = seq_a.values * seq_b.values
    D_a, _ = _functionals(seq_a.values, gamma)
    D_b, _ = _functionals(seq_b.values, gamma)
    D_ab, _ = _functionals(product, 2.0 * gamma)
    bound = D_a + D_b
    factor_vanishing = min(D_a, D_b) <= vanishing_level
    product_vanishing = D_ab <= vanishing_level
    passed = D_ab <= (1.0 + tolerance) * bound + 1e-15
    if factor_vanishing:
        passed = passed and product_vanishing
    return CheckVerdict(
        check="p3_products",
        params={"gamma": gamma, "length": len(seq_a), "A": seq_a.label, "B": seq_b.label,
                "tolerance": tolerance},
        seed=None,
        passed=passed,
        metrics={"Delta_A": D_a, "Delta_B": D_b, "Delta_2gamma_AB": D_ab, "bound": bound,
                 "factor_in_sigma0": factor_vanishing, "product_in_sigma0_2gamma": product_vanishing},
    )


def check_counting_equivalence(gamma: float, length: int = 10 ** 6, C: float = 1.0,
                               growth_limit: float = 1.5) -> CheckVerdict:
    """
    sup (log(n+1))^gamma s_n < inf iff sup s^{1/gamma} log n~(s) < inf, checked on a
    family inside the class and one decaying too slowly to be in it.
    """
    n = np.arange(1, length + 1, dtype=float)
    families = {
        "inside": C / np.log(n + 1.0) ** gamma,
        "outside": C / np.log(n + 1.0) ** (gamma / 2.0),
    }
    metrics: Dict[str, Any] = {}
    agree = True
    for name, values in families.items():
        scaled = scaled_sequence(values, gamma)
        seq_growth = float(scaled[-1] / scaled[9])
        s_grid = np.geomspace(values[-1], values[9], 64)
        asc = values[::-1]
        counts = asc.size - np.searchsorted(asc, s_grid, side="right")
        counting_scaled = s_grid ** (1.0 / gamma) * np.log(counts + 2)
        count_growth = float(counting_scaled[0] / counting_scaled[-1])
        seq_bounded = seq_growth <= growth_limit
        count_bounded = count_growth <= growth_limit
        agree = agree and seq_bounded == count_bounded and seq_bounded == (name == "inside")
        metrics[name] = {"sequence_growth": seq_growth, "counting_growth": count_growth,
                         "sequence_bounded": seq_bounded, "counting_bounded": count_bounded}
    return CheckVerdict("counting_equivalence", {"gamma": gamma, "length": length, "C": C}, None, agree, metrics)


def check_log_decay_functionals(C: float, gamma: float, length: int = 10 ** 6,
                                tolerance: float = 0.05) -> CheckVerdict:
    """Delta and delta of s_n = C / (log(n+1))^gamma both within ``tolerance`` of C^{1/gamma}."""
    seq = SyntheticOperator.log_decay(length, C, gamma)
    est = gamma_functionals(seq.values, gamma)
    expected = C ** (1.0 / gamma)
    rel = max(abs(est.Delta_hat / expected - 1.0), abs(est.delta_hat / expected - 1.0))
    return CheckVerdict(
        check="log_decay_functionals",
        params={"C": C, "gamma": gamma, "length": length, "tolerance": tolerance},
        seed=None,
        passed=rel <= tolerance,
        metrics={**est.to_dict(), "expected": expected, "max_rel_error": rel},
    )


# ---------------------------------------------------------------------------
# Block constructions
# ---------------------------------------------------------------------------


def random_block_family(rng: np.random.Generator, L: int, dim: int) -> BlockFamily:
    blocks = [rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)) for _ in range(L)]
    return BlockFamily(tuple(blocks))


def _s_grid_between(values: np.ndarray) -> np.ndarray:
    distinct = np.unique(values[values > 0.0])
    if distinct.size == 0:
        return np.array([1.0])
    grid = [distinct[0] / 2.0, distinct[-1] * 2.0]
    for lo, hi in zip(distinct[:-1], distinct[1:]):
        if hi > lo * (1.0 + 1e-8):
            grid.append(math.sqrt(lo * hi))
    return np.sort(np.array(grid))


def check_p4_blocks(family: BlockFamily, seed: Optional[int] = None,
                    product_tol: float = 1e-12, spectral_tol: float = 1e-10) -> CheckVerdict:
    """Gram/cogram identities of J A_0 and additivity of counting over the blocks."""
    products = block_embed_products(family)
    N, L = family.N, family.L
    scale = max(1.0, float(np.max(np.abs(products.cogram), initial=0.0)))

    direct_cogram = products.embedded @ products.embedded.conj().T
    err_cogram = float(np.max(np.abs(products.cogram - direct_cogram)))

    err_gram = 0.0
    for j, Aj in enumerate(family.blocks):
        for k, Ak in enumerate(family.blocks):
            block = products.gram[j * N:(j + 1) * N, k * N:(k + 1) * N]
            err_gram = max(err_gram, float(np.max(np.abs(block - Aj.conj().T @ Ak))))

    gram_eigs = np.sort(np.linalg.eigvalsh(products.gram))[::-1]
    cogram_eigs = np.sort(np.linalg.eigvalsh(products.cogram))[::-1]
    err_spectra = float(np.max(np.abs(gram_eigs[:N] - cogram_eigs)))
    err_kernel = float(np.max(np.abs(gram_eigs[N:]), initial=0.0))

    A0_values = singular_values(block_diagonal(family)).values
    block_values = [singular_values(A).values for A in family.blocks]
    grid = _s_grid_between(np.concatenate([A0_values] + block_values))
    mismatches = 0
    for s in grid:
        lhs, _ = counting(A0_values, s)
        rhs = sum(counting(v, s)[0] for v in block_values)
        mismatches += int(lhs != rhs)

    checks = {
        "cogram_identity": err_cogram <= product_tol * scale,
        "gram_blocks": err_gram <= product_tol * scale,
        "spectra_coincide": max(err_spectra, err_kernel) <= spectral_tol * scale,
        "counting_additive": mismatches == 0,
    }
    return CheckVerdict(
        check="p4_blocks",
        params={"L": L, "dim": N},
        seed=seed,
        passed=all(checks.values()),
        metrics={**checks, "err_cogram": err_cogram, "err_gram": err_gram, "err_spectra": err_spectra,
                 "err_kernel": err_kernel, "grid_points": int(grid.size), "count_mismatches": mismatches},
    )


def check_p4_random(families: int = 100, max_L: int = 4, max_dim: int = 8, seed: int = 0) -> CheckVerdict:
    rng = np.random.default_rng(seed)
    failures: List[Dict[str, Any]] = []
    for index in range(families):
        L = int(rng.integers(1, max_L + 1))
        dim = int(rng.integers(1, max_dim + 1))
        verdict = check_p4_blocks(random_block_family(rng, L, dim), seed=seed)
        if not verdict.passed:
            failures.append({"index": index, "L": L, "dim": dim, **verdict.metrics})
    return CheckVerdict("p4_blocks_random", {"families": families, "max_L": max_L, "max_dim": max_dim},
                        seed, not failures, {"failures": failures})


# ---------------------------------------------------------------------------
# Combinatorial inequality and the psi_0 weight
# ---------------------------------------------------------------------------


def _pair_indices(l: int) -> List[Tuple[int, int]]:
    """0-based index pairs of the 2l sums in the left-hand product."""
    pairs = [(1, 2)]
    pairs += [(j, j + 1) for j in range(2, l)]
    pairs += [(l, l + 1), (1, l + 2)]
    pairs += [(j, j + 1) for j in range(l + 2, 2 * l)]
    pairs += [(2 * l, l + 1)]
    return [(i - 1, j - 1) for i, j in pairs]


def lemma44_log_sides(r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """log LHS and log RHS for tuples r of shape (..., 2l)."""
    r = np.asarray(r, dtype=float)
    if r.shape[-1] % 2 or r.shape[-1] < 4:
        raise DomainError("tuples need 2l entries with l >= 2")
    if np.any(r <= 0.0):
        raise DomainError("tuple entries must be positive")
    l = r.shape[-1] // 2
    log_lhs = sum(np.log(r[..., i] + r[..., j]) for i, j in _pair_indices(l))
    logs = np.log(r)
    log_rhs = logs.max(axis=-1) + logs.sum(axis=-1) - logs.min(axis=-1)
    return log_lhs, log_rhs


def check_lemma44(l_values: Sequence[int] = (2, 3, 4, 5), samples: int = 100_000, seed: int = 0,
                  low: float = 1e-6) -> CheckVerdict:
    """LHS >= max^2 * (product without one max and one min) on log-uniform tuples."""
    rng = np.random.default_rng(seed)
    per_l: Dict[str, Any] = {}
    total_violations = 0
    for l in l_values:
        if l < 2:
            raise DomainError(f"l must be >= 2, got {l}")
        r = np.exp(rng.uniform(math.log(low), 0.0, size=(samples, 2 * l)))
        log_lhs, log_rhs = lemma44_log_sides(r)
        gap = log_lhs - log_rhs
        violations = int(np.count_nonzero(gap < -1e-12))
        total_violations += violations
        per_l[str(l)] = {"violations": violations, "min_ratio": float(np.exp(gap.min()))}
    return CheckVerdict("lemma44", {"l_values": list(l_values), "samples": samples, "low": low},
                        seed, total_violations == 0, {"per_l": per_l, "violations": total_violations})


def phi0_modulus(z: Any, gamma: float) -> np.ndarray:
    """phi_0(|z|) = (1 + log(1/(1-|z|)))^{-gamma}."""
    rad = np.abs(np.asarray(z))
    return (1.0 - np.log1p(-rad)) ** (-gamma)


def psi0(r: Any, gamma: float, printed: bool = False) -> np.ndarray:
    """
    (1 + log^+(1/r))^{-gamma}; equals 1 for r >= 1.

    ``printed=True`` gives 1/(1 + 1/log r)^gamma, which is undefined (nan)
    where the base is negative.
    """
    r = np.asarray(r, dtype=float)
    if printed:
        with np.errstate(invalid="ignore", divide="ignore"):
            return (1.0 + 1.0 / np.log(r)) ** (-gamma)
    return (1.0 + np.maximum(np.log(1.0 / r), 0.0)) ** (-gamma)


def lens_points(rng: np.random.Generator, samples: int, low: float = 1e-6) -> np.ndarray:
    """Points z = 1 - r e^{i a} of the unit disk with |a| < pi/2 and log-uniform r."""
    points: List[np.ndarray] = []
    count = 0
    while count < samples:
        r = np.exp(rng.uniform(math.log(low), 0.0, size=samples))
        a = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size=samples)
        z = 1.0 - r * np.exp(1j * a)
        z = z[np.abs(z) < 1.0]
        points.append(z)
        count += z.size
    return np.concatenate(points)[:samples]


def check_psi0_bound(gamma: float = 1.0, samples: int = 10_000, seed: int = 0,
                     printed_form: bool = False) -> CheckVerdict:
    """phi_0(|z|) <= psi_0(|1 - z|) on lens points."""
    rng = np.random.default_rng(seed)
    z = lens_points(rng, samples)
    r = np.abs(1.0 - z)
    lhs = phi0_modulus(z, gamma)
    rhs = psi0(r, gamma)
    violations = int(np.count_nonzero(lhs > rhs * (1.0 + 1e-12)))
    printed = psi0(r, gamma, printed=True)
    printed_undefined = int(np.count_nonzero(~np.isfinite(printed)))
    printed_violations = int(np.count_nonzero(np.isfinite(printed) & (lhs > printed * (1.0 + 1e-12))))
    passed = violations == 0
    if printed_form:
        passed = printed_violations == 0 and printed_undefined == 0
    return CheckVerdict(
        check="psi0_bound",
        params={"gamma": gamma, "samples": samples, "printed_form": printed_form},
        seed=seed,
        passed=passed,
        metrics={"violations": violations, "max_ratio": float(np.max(lhs / rhs)),
                 "printed_violations": printed_violations, "printed_undefined": printed_undefined},
    )


# ---------------------------------------------------------------------------
# Arc pieces: cross terms and compact support
# ---------------------------------------------------------------------------


@dataclass
class CrossTermReport:
    L: int
    gamma: float
    N: int
    pairs: List[Dict[str, Any]]
    control: Dict[str, Any]
    passed: bool

    def verdict(self) -> CheckVerdict:
        return CheckVerdict("cross_terms", {"L": self.L, "gamma": self.gamma, "N": self.N}, None,
                            self.passed, {"pairs": self.pairs, "control": self.control})


def _adjacent(j: int, k: int, L: int) -> bool:
    return abs(j - k) == 1 or abs(j - k) == L - 1


def _window_trend(values: np.ndarray, gamma2: float, window: Tuple[int, int]) -> Dict[str, Any]:
    scaled = scaled_sequence(values, gamma2)
    n_lo, n_hi = window
    seg = scaled[n_lo - 1:n_hi]
    start = float(np.median(seg[:3]))
    end = float(np.median(seg[-3:]))
    n = np.arange(n_lo, n_hi + 1)
    slope = float(np.polyfit(np.log(n), seg, 1)[0])
    return {"start": start, "end": end, "ratio": end / start if start > 0 else float("nan"), "slope": slope}


def cross_term_diagnostic(L: int = 4, gamma: float = 1.0, N: int = 512, window: Optional[Tuple[int, int]] = None,
                          workers: int = 1, hs_tolerance: float = 0.10, adjacent_decrease: float = 0.25,
                          control_floor: float = 0.5) -> CrossTermReport:
    """
    Products T_k^* T_j of arc pieces: Hilbert-Schmidt stabilization for non-adjacent
    pairs (N vs 2N), decay of (log(n+1))^{2 gamma} s_n for adjacent pairs, and the
    self-product as the non-vanishing control.
    """
    if L < 3:
        raise DomainError("cross-term diagnostic needs L >= 3")
    if 2 * N > DENSE_LIMIT:
        raise DomainError(f"2N = {2 * N} exceeds the dense limit {DENSE_LIMIT}")
    window = window or (16, N // 8)
    if not 1 <= window[0] < window[1] <= N:
        raise WindowError(f"window {window} outside 1..{N}")
    big = assemble_arc_family(L, gamma, 2 * N, workers=workers)
    small = [A[:N, :N] for A in big.blocks]
    gamma2 = 2.0 * gamma

    pairs: List[Dict[str, Any]] = []
    ok = True
    for j in range(L):
        for k in range(j + 1, L):
            product = small[k].conj().T @ small[j]
            entry: Dict[str, Any] = {"j": j + 1, "k": k + 1, "adjacent": _adjacent(j, k, L),
                                     "norm": float(singular_values(product).values[0])}
            hs_small = hilbert_schmidt_norm(product)
            entry["hs_norm"] = hs_small
            if entry["adjacent"]:
                trend = _window_trend(singular_values(product).values, gamma2, window)
                entry["trend"] = trend
                ok = ok and trend["ratio"] <= 1.0 - adjacent_decrease
            else:
                hs_big = hilbert_schmidt_norm(big.blocks[k].conj().T @ big.blocks[j])
                change = abs(hs_big - hs_small) / hs_small if hs_small > 0 else float("inf")
                entry.update({"hs_norm_2N": hs_big, "hs_rel_change": change})
                ok = ok and change <= hs_tolerance
            pairs.append(entry)

    self_product = small[0].conj().T @ small[0]
    control = _window_trend(singular_values(self_product).values, gamma2, window)
    ok = ok and control["ratio"] >= control_floor
    logger.info("cross terms L=%d N=%d: %s", L, N, "ok" if ok else "failed")
    return CrossTermReport(L=L, gamma=gamma, N=N, pairs=pairs, control=control, passed=ok)


def check_compact_support_decay(delta: float, N: int, gamma: float = 1.0, L: int = 1, arc: int = 1,
                                cutoff: bool = True, margin: float = 0.10, floor_rel: float = 1e-12,
                                skip: int = 4, workers: int = 1) -> CheckVerdict:
    """
    Log-linear fit of s_n for the symbol chi_{|z| <= 1 - delta} chi_arc phi_0.

    L = 1 (the radial piece) must match the rate 2 log(1 - delta) within ``margin``;
    L > 1 must decay at least that fast up to the margin. Without the cutoff the
    fit is expected to be rejected.
    """
    if not 0.0 < delta <= 0.5:
        raise DomainError(f"delta must lie in (0, 1/2], got {delta}")
    radial = RadialWeight(gamma, cutoff=1.0 - delta if cutoff else None)
    sym = SeparableSymbol(ArcPartition(L, arc).indicator(), radial)
    values = singular_values(assemble_toeplitz(sym, N, workers)).values
    keep = np.flatnonzero(values >= floor_rel * values[0])
    keep = keep[keep >= skip]
    bound = 2.0 * math.log(1.0 - delta)
    params = {"delta": delta, "N": N, "gamma": gamma, "L": L, "arc": arc, "cutoff": cutoff, "margin": margin}
    if keep.size < 3:
        return CheckVerdict("compact_support_decay", params, None, False,
                            {"fit_points": int(keep.size), "bound": bound})
    slope, intercept = np.polyfit(keep.astype(float), np.log(values[keep]), 1)
    exponential = slope <= (1.0 - margin) * bound
    if not cutoff:
        passed = not exponential
    elif L == 1:
        passed = abs(slope - bound) <= margin * abs(bound)
    else:
        passed = exponential
    return CheckVerdict(
        check="compact_support_decay",
        params=params,
        seed=None,
        passed=bool(passed),
        metrics={"slope": float(slope), "intercept": float(intercept), "bound": bound,
                 "fit_points": int(keep.size), "fit_range": [int(keep[0]), int(keep[-1])],
                 "exponential": bool(exponential)},
    )


# ---------------------------------------------------------------------------
# Weyl inequalities and truncation stability
# ---------------------------------------------------------------------------


def _compact_like(rng: np.random.Generator, dim: int) -> np.ndarray:
    U, V = _unitary(rng, dim), _unitary(rng, dim)
    s = 2.0 ** (-np.arange(dim, dtype=float)) * rng.uniform(0.5, 2.0)
    return (U * s) @ V.conj().T


def check_weyl_inequalities(pairs: int = 100, max_dim: int = 16, seed: int = 0) -> CheckVerdict:
    """s_n(BA) <= ||B|| s_n(A) and n(s1 s2, AB) <= n(s1, A) + n(s2, B) on random pairs."""
    rng = np.random.default_rng(seed)
    product_violations = 0
    counting_violations = 0
    worst = 0.0
    for _ in range(pairs):
        dim = int(rng.integers(2, max_dim + 1))
        A = _compact_like(rng, dim)
        B = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        s_a = singular_values(A).values
        s_b = singular_values(B).values
        s_ba = singular_values(B @ A).values
        bound = s_b[0] * s_a
        excess = s_ba - bound * (1.0 + 1e-10) - 1e-14 * s_b[0] * s_a[0]
        product_violations += int(np.count_nonzero(excess > 0.0))
        worst = max(worst, float(np.max(s_ba / np.maximum(bound, 1e-300))))

        s_ab = singular_values(A @ B).values
        for _ in range(8):
            s1 = float(np.exp(rng.uniform(np.log(s_a[-1] / 2.0), np.log(s_a[0] * 2.0))))
            s2 = float(np.exp(rng.uniform(np.log(s_b[-1] / 2.0), np.log(s_b[0] * 2.0))))
            lhs, _ = counting(s_ab, s1 * s2 * (1.0 + 1e-9))
            rhs = counting(s_a, s1)[0] + counting(s_b, s2)[0]
            counting_violations += int(lhs > rhs)
    return CheckVerdict(
        check="weyl_inequalities",
        params={"pairs": pairs, "max_dim": max_dim},
        seed=seed,
        passed=product_violations == 0 and counting_violations == 0,
        metrics={"product_violations": product_violations, "counting_violations": counting_violations,
                 "max_product_ratio": worst},
    )


def check_truncation_stability(sym: SeparableSymbol, N: int, count: int = 64, tolerance: float = 0.01,
                               workers: int = 1) -> CheckVerdict:
    """Leading singular values of the N and 2N sections agree to ``tolerance`` relative."""
    if 2 * N > DENSE_LIMIT:
        raise DomainError(f"2N = {2 * N} exceeds the dense limit {DENSE_LIMIT}")
    big = assemble_toeplitz(sym, 2 * N, workers)
    s_big = singular_values(big).values
    s_small = singular_values(big.leading(N)).values
    k = min(count, N // 8) if N >= 64 else min(count, N)
    rel = np.abs(s_small[:k] - s_big[:k]) / s_big[:k]
    max_rel = float(rel.max())
    return CheckVerdict(
        check="truncation_stability",
        params={"N": N, "count": k, "tolerance": tolerance, "symbol": sym.describe()},
        seed=None,
        passed=max_rel <= tolerance,
        metrics={"max_rel_diff": max_rel, "worst_index": int(np.argmax(rel)) + 1},
    )


def check_jacobi_oracle(matrices: int = 20, max_dim: int = 12, seed: int = 0,
                        tolerance: float = 1e-10) -> CheckVerdict:
    """
    Rotation-based eigenvalues against LAPACK on random Hermitian matrices, and
    singular values through the eigenvalues of A^* A.
    """
    rng = np.random.default_rng(seed)
    worst_eig = 0.0
    worst_sv = 0.0
    for _ in range(matrices):
        dim = int(rng.integers(2, max_dim + 1))
        A = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        H = 0.5 * (A + A.conj().T)
        scale = max(1.0, float(np.max(np.abs(H))))
        lam = jacobi_eigenvalues(H)
        worst_eig = max(worst_eig, float(np.max(np.abs(lam - np.linalg.eigvalsh(H)))) / scale)

        gram = A.conj().T @ A
        sv = np.sqrt(np.clip(jacobi_eigenvalues(gram), 0.0, None))[::-1]
        ref = singular_values(A).values
        worst_sv = max(worst_sv, float(np.max(np.abs(sv - ref))) / max(1.0, ref[0]))
    return CheckVerdict(
        check="jacobi_oracle",
        params={"matrices": matrices, "max_dim": max_dim, "tolerance": tolerance},
        seed=seed,
        passed=worst_eig <= tolerance and worst_sv <= 1e3 * tolerance,
        metrics={"max_eig_error": worst_eig, "max_singular_error": worst_sv},
    )
