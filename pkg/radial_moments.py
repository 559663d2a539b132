"""
radial_moments.py

Radial moments M(n) = int_0^1 r^n phi_0(r) g(r) dr and their large-n asymptotics.

The quadrature works in the variable u = -log(1-r), where the moment becomes

    int_0^inf (1 - e^{-u})^n e^{-u} (1 + u)^{-gamma} g(1 - e^{-u}) du,

a smooth integrand bounded by e^{-u}. The interval is truncated at
u_max = max(60, 40 + 2 log(n+2)) and split into unit panels, each refined by
bisection with a 32-point Gauss-Legendre rule until the panel's coarse/fine
discrepancy is below its share of the relative tolerance or at the rounding floor.

Example:
    >>> q = MomentQuery(n=5, gamma=0.0)
    >>> moment_quadrature(q).value   # 1/6
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from lab_errors import DomainError, QuadratureError, QuadratureRefused
from symbol_model import RadialProfile, RadialWeight, validate_gamma

logger = logging.getLogger(__name__)

GL_ORDER = 32
REL_TOL = 1e-12
MAX_PANELS = 4096
REFUSE_POWER = 10 ** 8
# panels whose two estimates agree to this many ulps are at the rounding floor
ROUNDOFF_ULPS = 64
RDOMAIN_GRADING = 48


@lru_cache(maxsize=8)
def gauss_legendre_rule(order: int = GL_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@dataclass
class QuadratureOutcome:
    value: float
    error: float
    converged: bool
    panels: int


def _panel_sums(func: Callable[[np.ndarray], np.ndarray], a: np.ndarray, b: np.ndarray,
                order: int) -> np.ndarray:
    nodes, weights = gauss_legendre_rule(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    pts = mid[:, None] + half[:, None] * nodes[None, :]
    vals = func(pts.ravel()).reshape(pts.shape)
    return half * (vals @ weights)


def adaptive_gauss_legendre(func: Callable[[np.ndarray], np.ndarray], breakpoints: Sequence[float],
                            rel_tol: float = REL_TOL, max_panels: int = MAX_PANELS,
                            order: int = GL_ORDER) -> QuadratureOutcome:
    """
    Integrate a vectorized ``func`` over [breakpoints[0], breakpoints[-1]].

    Panels are refined level by level, so the schedule only depends on the
    integrand and the results are bit-stable across runs.
    """
    bps = np.asarray(breakpoints, dtype=float)
    total_width = float(bps[-1] - bps[0])
    a, b = bps[:-1], bps[1:]
    coarse = _panel_sums(func, a, b, order)

    accepted_value = 0.0
    accepted_error = 0.0
    accepted_count = 0
    while True:
        m = 0.5 * (a + b)
        left = _panel_sums(func, a, m, order)
        right = _panel_sums(func, m, b, order)
        fine = left + right
        diff = np.abs(fine - coarse)
        estimate = abs(accepted_value + float(np.sum(fine)))
        allowed = np.maximum(rel_tol * estimate * (b - a) / total_width,
                             ROUNDOFF_ULPS * np.finfo(float).eps * np.abs(fine)) + 1e-300
        ok = diff <= allowed

        accepted_value += float(np.sum(fine[ok]))
        accepted_error += float(np.sum(diff[ok]))
        accepted_count += int(np.count_nonzero(ok))
        if np.all(ok):
            return QuadratureOutcome(accepted_value, accepted_error, True, accepted_count)

        bad = ~ok
        if accepted_count + 2 * int(np.count_nonzero(bad)) > max_panels:
            value = accepted_value + float(np.sum(fine[bad]))
            error = accepted_error + float(np.sum(diff[bad]))
            return QuadratureOutcome(value, error, False, accepted_count + int(np.count_nonzero(bad)))

        a = np.concatenate([a[bad], m[bad]])
        b = np.concatenate([m[bad], b[bad]])
        coarse = np.concatenate([left[bad], right[bad]])
        order_idx = np.argsort(a, kind="stable")
        a, b, coarse = a[order_idx], b[order_idx], coarse[order_idx]


@dataclass(frozen=True)
class MomentQuery:
    """Moment of r^n against the radial weight (gamma, profile, kind, cutoff)."""

    n: int
    gamma: float
    profile: RadialProfile = field(default_factory=RadialProfile)
    kind: str = "log"
    cutoff: Optional[float] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise DomainError(f"moment power must be a non-negative integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "gamma", validate_gamma(self.gamma))

    @classmethod
    def for_weight(cls, n: int, radial: RadialWeight) -> "MomentQuery":
        return cls(n, radial.gamma, radial.profile, radial.kind, radial.cutoff)

    @property
    def radial(self) -> RadialWeight:
        return RadialWeight(self.gamma, self.profile, self.kind, self.cutoff)


@dataclass(frozen=True)
class MomentResult:
    value: float
    method: str
    error_estimate: float
    converged: bool = True
    note: str = ""

    def as_row(self, n: int, gamma: float) -> List[object]:
        return [n, gamma, self.value, self.method, self.error_estimate]


def u_truncation(n: int) -> float:
    return max(60.0, 40.0 + 2.0 * math.log(n + 2))


def log1mexp(u: np.ndarray) -> np.ndarray:
    """log(1 - e^{-u}) accurate at both ends of u > 0."""
    u = np.asarray(u, dtype=float)
    small = u <= math.log(2.0)
    with np.errstate(divide="ignore"):
        near = np.log(-np.expm1(-np.where(small, u, 1.0)))
    far = np.log1p(-np.exp(-np.where(small, 1.0, u)))
    return np.where(small, near, far)


def _u_integrand(q: MomentQuery) -> Callable[[np.ndarray], np.ndarray]:
    n, gamma, profile, kind = q.n, q.gamma, q.profile, q.kind

    def integrand(u: np.ndarray) -> np.ndarray:
        if n == 0:
            power = np.ones_like(u)
        else:
            power = np.exp(n * log1mexp(u))
        if kind == "power":
            weight = np.exp(-(1.0 + gamma) * u)
        elif gamma == 0.0:
            weight = np.exp(-u)
        else:
            weight = np.exp(-u) * (1.0 + u) ** (-gamma)
        if not profile.is_unit:
            weight = weight * profile.of_u(u)
        return power * weight

    return integrand


def moment_quadrature(q: MomentQuery, rel_tol: float = REL_TOL,
                      max_panels: int = MAX_PANELS) -> MomentResult:
    """
    Quadrature in the u-variable.

    Non-convergence is not raised: the result carries converged=False and the
    accumulated discrepancy as error_estimate, and the caller decides.
    """
    if q.n >= REFUSE_POWER:
        raise QuadratureRefused(f"quadrature refused for n={q.n} >= {REFUSE_POWER}; use moment_asymptotic")

    u_max = u_truncation(q.n)
    tail = math.exp(-u_max) * q.profile.bound
    if q.cutoff is not None:
        u_max = -math.log1p(-q.cutoff)
        tail = 0.0
    bps = list(np.arange(0.0, math.floor(u_max) + 1.0))
    if bps[-1] < u_max:
        bps.append(u_max)
    if len(bps) < 2:
        bps = [0.0, u_max]

    outcome = adaptive_gauss_legendre(_u_integrand(q), bps, rel_tol=rel_tol, max_panels=max_panels)
    note = "" if outcome.converged else f"panel budget {max_panels} exhausted"
    if not outcome.converged:
        logger.warning("moment n=%d gamma=%g did not converge (err=%.3e)", q.n, q.gamma, outcome.error)
    return MomentResult(
        value=outcome.value,
        method="quadrature",
        error_estimate=outcome.error + tail,
        converged=outcome.converged,
        note=note,
    )


def moment_quadrature_rdomain(q: MomentQuery, rel_tol: float = REL_TOL,
                              max_panels: int = MAX_PANELS) -> MomentResult:
    """Same moment integrated directly in r on panels graded towards r = 1."""
    if q.n >= REFUSE_POWER:
        raise QuadratureRefused(f"quadrature refused for n={q.n} >= {REFUSE_POWER}")
    radial = q.radial
    n = q.n
    top = q.cutoff if q.cutoff is not None else 1.0 - 2.0 ** (-RDOMAIN_GRADING)
    bps = [0.0] + [1.0 - 2.0 ** (-k) for k in range(1, RDOMAIN_GRADING + 1)]
    bps = [x for x in bps if x < top] + [top]

    def integrand(r: np.ndarray) -> np.ndarray:
        return r ** n * radial.base(r) * radial.profile(r)

    outcome = adaptive_gauss_legendre(integrand, bps, rel_tol=rel_tol, max_panels=max_panels)
    return MomentResult(outcome.value, "quadrature", outcome.error + (1.0 - top if q.cutoff is None else 0.0),
                        outcome.converged, "r-domain")


def moment_asymptotic(q: MomentQuery) -> MomentResult:
    """g(1) / (n (log n)^gamma) with the next-order term as a heuristic error scale."""
    if q.n < 2:
        raise DomainError(f"asymptotic moment needs n >= 2, got {q.n}")
    if q.kind != "log":
        raise DomainError("asymptotic moment is implemented for the logarithmic weight only")
    g1 = 0.0 if q.cutoff is not None else q.profile.limit
    if g1 == 0.0:
        raise DomainError("asymptotic moment needs a declared g(1) != 0")
    log_n = math.log(q.n)
    value = g1 / (q.n * log_n ** q.gamma)
    heuristic = abs(g1 * q.gamma / (q.n * log_n ** (q.gamma + 1.0)))
    return MomentResult(value, "asymptotic", heuristic, True, "next-order heuristic gamma/log n")


def moment(q: MomentQuery) -> MomentResult:
    """Quadrature when allowed, asymptotic beyond the refusal threshold."""
    if q.n >= REFUSE_POWER:
        return moment_asymptotic(q)
    return moment_quadrature(q)


def diag_entry(n: int, gamma: float, profile: Optional[RadialProfile] = None) -> float:
    """(T_{phi_0} e_n, e_n) = 2(n+1) M(2n+1)."""
    q = MomentQuery(2 * int(n) + 1, gamma, profile or RadialProfile())
    result = moment_quadrature(q)
    if not result.converged:
        raise QuadratureError(f"diagonal entry n={n} gamma={gamma}: {result.note}")
    return 2.0 * (n + 1) * result.value


def power_weight_moment(n: int, gamma: float) -> float:
    """2(n+1) int_0^1 r^{2n+1} (1-r)^gamma dr = 2(n+1) B(2n+2, gamma+1)."""
    if gamma <= 0.0:
        raise DomainError(f"power weight needs gamma > 0, got {gamma}")
    return 2.0 * (n + 1) * math.exp(special.betaln(2.0 * n + 2.0, gamma + 1.0))


def _closed_form_table(count: int, radial: RadialWeight) -> Optional[List[MomentResult]]:
    if radial.cutoff is not None or not radial.profile.is_unit:
        return None
    p = np.arange(count, dtype=float)
    if radial.kind == "power":
        values = np.exp(special.betaln(p + 1.0, radial.gamma + 1.0))
        method = "beta"
    elif radial.gamma == 0.0:
        values = 1.0 / (p + 1.0)
        method = "exact"
    else:
        return None
    return [MomentResult(float(v), method, 0.0) for v in values]


def moment_table(count: int, radial: RadialWeight, workers: int = 1) -> List[MomentResult]:
    """
    M(p) for p = 0..count-1, one quadrature per power.

    Workers run independent powers; ``map`` keeps the merge in index order.
    """
    closed = _closed_form_table(count, radial)
    if closed is not None:
        return closed

    queries = [MomentQuery.for_weight(p, radial) for p in range(count)]
    if workers > 1 and count > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(moment_quadrature, queries))
    else:
        results = [moment_quadrature(q) for q in queries]

    failed = [p for p, r in enumerate(results) if not r.converged]
    if failed:
        raise QuadratureError(f"{len(failed)} moment(s) did not converge, first at p={failed[0]}")
    logger.debug("moment table: %d powers, gamma=%g", count, radial.gamma)
    return results


def moment_values(results: Sequence[MomentResult]) -> np.ndarray:
    return np.array([r.value for r in results], dtype=float)


if __name__ == "__main__":
    for gamma in (0.5, 1.0, 2.0):
        print(f"gamma = {gamma}")
        for n in (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6):
            q = MomentQuery(n, gamma)
            quad = moment_quadrature(q)
            asym = moment_asymptotic(q)
            print(f"  n={n:>8d}  quad={quad.value:.6e}  asym={asym.value:.6e}  ratio={quad.value / asym.value:.4f}")
