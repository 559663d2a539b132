"""
spectra.py

Dense spectral computations and the counting-function calculus.

Index convention: spectra are stored 0-based and array position i holds the
(i+1)-th singular value, so the scaled sequence uses n = i + 1 and reads
(log(n+1))^gamma * s_n. Sequences of diagonal entries pass index_base=0.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from lab_errors import BudgetError, DomainError, PreconditionError, SpectralComputationError, WindowError
from operator_assembly import ToeplitzTruncation

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
NOISE_REL = 1e-12
STURM_LIMIT = 50_000
STURM_REL_TOL = 1e-12
WINDOW_POINTS = 64
MIN_WINDOW_START = 8
JACOBI_ROTATION_FACTOR = 30


def _as_matrix(matrix: Any) -> np.ndarray:
    a = matrix.entries if isinstance(matrix, ToeplitzTruncation) else np.asarray(matrix)
    if a.ndim != 2:
        raise PreconditionError(f"expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise PreconditionError("matrix has non-finite entries")
    return a


@dataclass(frozen=True, eq=False)
class SingularSpectrum:
    values: np.ndarray
    source_dim: int
    eigenvalues: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class SignedSpectrum:
    positives: np.ndarray
    negatives: np.ndarray
    source_dim: int
    noise_floor: float = 0.0


@dataclass(frozen=True, eq=False)
class CountingProfile:
    s: np.ndarray
    n: np.ndarray
    n_shifted: np.ndarray
    scaled: np.ndarray
    gamma: float

    def rows(self):
        for s, n, ns, sc in zip(self.s, self.n, self.n_shifted, self.scaled):
            yield [float(s), int(n), int(ns), float(sc)]


@dataclass(frozen=True)
class GammaFunctionalEstimate:
    Delta_hat: float
    delta_hat: float
    s_window: Tuple[float, float]
    index_window: Optional[Tuple[int, int]]
    gamma: float
    points: int = WINDOW_POINTS

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class AsymptoticFit:
    c_hat: float
    window: Tuple[int, int]
    residual: float
    c_affine: float
    offset: float
    affine_residual: float
    endpoint: float
    endpoint_start: float
    gamma: float
    guard: str = "n_hi <= N/8"

    @property
    def endpoint_increasing(self) -> bool:
        return self.endpoint > self.endpoint_start

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["endpoint_increasing"] = self.endpoint_increasing
        return out


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------


def singular_values(matrix: Any) -> SingularSpectrum:
    """All singular values, descending (LAPACK gesdd, gesvd as fallback)."""
    a = _as_matrix(matrix)
    try:
        values = linalg.svdvals(a, check_finite=False)
    except linalg.LinAlgError:
        logger.warning("gesdd failed on a %dx%d matrix, retrying with gesvd", *a.shape)
        try:
            values = linalg.svd(a, compute_uv=False, lapack_driver="gesvd", check_finite=False)
        except linalg.LinAlgError as exc:
            raise SpectralComputationError(f"SVD did not converge for shape {a.shape}") from exc
    return SingularSpectrum(np.sort(values)[::-1], source_dim=a.shape[0])


def check_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> float:
    skew = float(np.max(np.abs(a - a.conj().T), initial=0.0))
    if skew > tol * max(1.0, float(np.max(np.abs(a), initial=0.0))):
        raise PreconditionError(f"matrix is not Hermitian (max skew {skew:.3e})")
    return skew


def eigen_signed(matrix: Any, noise_floor: Optional[float] = None) -> SignedSpectrum:
    """
    Positive and negative eigenvalue families, each by modulus descending.

    Eigenvalues within ``noise_floor`` of zero (default 1e-12 * max |lambda|)
    belong to neither family.
    """
    a = _as_matrix(matrix)
    check_hermitian(a)
    try:
        lam = linalg.eigvalsh(0.5 * (a + a.conj().T), check_finite=False)
    except linalg.LinAlgError as exc:
        raise SpectralComputationError("Hermitian eigensolve did not converge") from exc
    scale = float(np.max(np.abs(lam), initial=0.0))
    floor = NOISE_REL * scale if noise_floor is None else float(noise_floor)
    positives = np.sort(lam[lam > floor])[::-1]
    negatives = np.sort(-lam[lam < -floor])[::-1]
    return SignedSpectrum(positives, negatives, source_dim=a.shape[0], noise_floor=floor)


def tridiagonal_eigenvalues(diag: Sequence[float], offdiag: Sequence[float]) -> SingularSpectrum:
    """
    Eigenvalues of a real symmetric tridiagonal matrix by Sturm bisection
    (LAPACK stebz) to absolute tolerance 1e-12 * max|entry|; returns moduli.
    """
    d = np.asarray(diag, dtype=float)
    e = np.asarray(offdiag, dtype=float)
    N = d.size
    if e.size != max(N - 1, 0):
        raise PreconditionError(f"off-diagonal length {e.size} does not match N-1 = {N - 1}")
    if N > STURM_LIMIT:
        raise BudgetError(f"bisection limited to N <= {STURM_LIMIT}, got {N}")
    if N == 1:
        lam = d.copy()
    else:
        scale = max(float(np.max(np.abs(d), initial=0.0)), float(np.max(np.abs(e), initial=0.0)), 1e-300)
        try:
            lam = linalg.eigvalsh_tridiagonal(d, e, lapack_driver="stebz", tol=STURM_REL_TOL * scale,
                                              check_finite=False)
        except linalg.LinAlgError as exc:
            raise SpectralComputationError("tridiagonal bisection failed") from exc
    moduli = np.sort(np.abs(lam))[::-1]
    return SingularSpectrum(moduli, source_dim=N, eigenvalues=np.sort(lam))


def sturm_count(diag: Sequence[float], offdiag: Sequence[float], x: Any) -> np.ndarray:
    """Number of eigenvalues strictly below each x, from the signs of the LDL^T pivots."""
    d = np.asarray(diag, dtype=float)
    e2 = np.asarray(offdiag, dtype=float) ** 2
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    tiny = np.finfo(float).tiny
    count = np.zeros(xs.shape, dtype=np.int64)
    q = d[0] - xs
    for idx in range(d.size):
        if idx > 0:
            q = (d[idx] - xs) - e2[idx - 1] / q
        q = np.where(q == 0.0, -tiny, q)
        count += q < 0.0
    return count


def jacobi_eigenvalues(matrix: Any, tol: float = 1e-13, max_rotations: Optional[int] = None) -> np.ndarray:
    """
    Eigenvalues (ascending) of a symmetric/Hermitian matrix by cyclic Jacobi sweeps.

    Complex Hermitian input is handled through the real symmetric embedding
    [[Re, -Im], [Im, Re]], whose spectrum repeats each eigenvalue twice.
    """
    a = _as_matrix(matrix)
    check_hermitian(a)
    complex_input = np.iscomplexobj(a) and np.any(a.imag != 0.0)
    if complex_input:
        X = np.block([[a.real, -a.imag], [a.imag, a.real]]).astype(float)
    else:
        X = np.array(a.real, dtype=float)
    X = 0.5 * (X + X.T)
    n = X.shape[0]
    budget = JACOBI_ROTATION_FACTOR * n * n if max_rotations is None else max_rotations
    total = float(np.linalg.norm(X))
    rotations = 0

    def off_norm(M: np.ndarray) -> float:
        return float(np.sqrt(2.0 * np.sum(np.triu(M, 1) ** 2)))

    while off_norm(X) > tol * max(total, 1e-300):
        swept = rotations
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = X[p, q]
                if abs(apq) <= tol * total / n:
                    continue
                if rotations >= budget:
                    raise SpectralComputationError(
                        f"Jacobi rotation budget {budget} exhausted", best_iterate=np.sort(np.diag(X))
                    )
                theta = (X[q, q] - X[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = X[:, p].copy(), X[:, q].copy()
                X[:, p] = c * col_p - s * col_q
                X[:, q] = s * col_p + c * col_q
                row_p, row_q = X[p, :].copy(), X[q, :].copy()
                X[p, :] = c * row_p - s * row_q
                X[q, :] = s * row_p + c * row_q
                rotations += 1
        if rotations == swept:
            break
    lam = np.sort(np.diag(X))
    return lam[::2] if complex_input else lam


# ---------------------------------------------------------------------------
# Counting functions and Sigma_gamma functionals
# ---------------------------------------------------------------------------


def counting(values: Sequence[float], s: float) -> Tuple[int, int]:
    """(n(s), n(s) + 2) with n(s) = #{values > s}."""
    if not s > 0.0:
        raise DomainError(f"counting threshold must be positive, got {s}")
    n = int(np.count_nonzero(np.asarray(values) > s))
    return n, n + 2


def _counts(ascending: np.ndarray, s: np.ndarray) -> np.ndarray:
    return ascending.size - np.searchsorted(ascending, s, side="right")


def counting_profile(values: Sequence[float], gamma: float, s_grid: Sequence[float]) -> CountingProfile:
    if gamma <= 0.0:
        raise DomainError("counting profile needs gamma > 0")
    s = np.asarray(s_grid, dtype=float)
    if np.any(s <= 0.0):
        raise DomainError("counting thresholds must be positive")
    asc = np.sort(np.asarray(values, dtype=float))
    n = _counts(asc, s)
    shifted = n + 2
    return CountingProfile(s, n, shifted, s ** (1.0 / gamma) * np.log(shifted), gamma)


def default_index_window(N: int) -> Tuple[int, int]:
    """[max(8, N/256), N/8]."""
    lo, hi = max(MIN_WINDOW_START, N // 256), N // 8
    if hi <= lo:
        raise WindowError(f"length {N} too short for an index window (needs N/8 > {lo})")
    return lo, hi


def gamma_functionals(values: Sequence[float], gamma: float,
                      s_window: Optional[Tuple[float, float]] = None,
                      index_window: Optional[Tuple[int, int]] = None,
                      points: int = WINDOW_POINTS) -> GammaFunctionalEstimate:
    """
    Window max/min of s^{1/gamma} log n~(s) over log-spaced s.

    The window defaults to the values at the index window and is clipped from
    below at the truncation floor, the value at position N/8.
    """
    if gamma <= 0.0:
        raise DomainError("gamma functionals need gamma > 0")
    desc = np.sort(np.asarray(values, dtype=float))[::-1]
    N = desc.size
    if N < 16:
        raise WindowError(f"sequence of length {N} too short for the estimator")
    floor = desc[N // 8]
    if s_window is None:
        lo_idx, hi_idx = index_window or default_index_window(N)
        if not 0 <= lo_idx < hi_idx < N:
            raise WindowError(f"index window {(lo_idx, hi_idx)} outside 0..{N - 1}")
        s_lo, s_hi = desc[hi_idx], desc[lo_idx]
    else:
        s_lo, s_hi = map(float, s_window)
    s_lo = max(s_lo, floor)
    if not (s_hi > 0.0 and s_lo > 0.0 and s_hi > s_lo):
        raise WindowError(f"empty s-window after floor guard: [{s_lo:.3e}, {s_hi:.3e}]")

    grid = np.geomspace(s_lo, s_hi, points)
    n = _counts(desc[::-1], grid)
    scaled = grid ** (1.0 / gamma) * np.log(n + 2)
    return GammaFunctionalEstimate(
        Delta_hat=float(scaled.max()),
        delta_hat=float(scaled.min()),
        s_window=(float(s_lo), float(s_hi)),
        index_window=None if s_window is not None else (int(lo_idx), int(hi_idx)),
        gamma=float(gamma),
        points=points,
    )


def scaled_sequence(values: Sequence[float], gamma: float, index_base: int = 1) -> np.ndarray:
    """(log(n+1))^gamma * s_n with n = position + index_base."""
    s = np.asarray(values, dtype=float)
    n = np.arange(s.size) + index_base
    return np.log(n + 1.0) ** gamma * s


def fit_scaled_model(n: Sequence[float], s: Sequence[float], gamma: float) -> AsymptoticFit:
    """
    Least squares for s_n ~ c x_n with x_n = 1 / log(n+1)^gamma; c_hat = <x, s> / <x, x>.

    The offset model s_n ~ c / (log(n+1) + b)^gamma is fitted alongside
    (s^{-1/gamma} affine in log(n+1)) and reported as c_affine/offset only.
    """
    if gamma <= 0.0:
        raise DomainError("asymptotic fit needs gamma > 0")
    n = np.asarray(n, dtype=float)
    s = np.asarray(s, dtype=float)
    if n.size < 3 or np.any(s <= 0.0):
        raise WindowError("fit needs at least 3 positive values")
    t = np.log(n + 1.0)
    x = t ** (-gamma)
    c_hat = float(np.dot(x, s) / np.dot(x, x))
    residual = float(np.sqrt(np.mean((s / (c_hat * x) - 1.0) ** 2)))

    design = np.column_stack([np.ones_like(t), t])
    (intercept, slope), *_ = np.linalg.lstsq(design, s ** (-1.0 / gamma), rcond=None)
    if slope > 0.0:
        c_affine = float(slope ** (-gamma))
        offset = float(intercept / slope)
        affine_model = c_affine / np.maximum(t + offset, np.finfo(float).tiny) ** gamma
        affine_residual = float(np.sqrt(np.mean((s / affine_model - 1.0) ** 2)))
    else:
        c_affine = offset = affine_residual = float("nan")
    return AsymptoticFit(
        c_hat=c_hat,
        window=(int(n[0]), int(n[-1])),
        residual=residual,
        c_affine=c_affine,
        offset=offset,
        affine_residual=affine_residual,
        endpoint=float(t[-1] ** gamma * s[-1]),
        endpoint_start=float(t[0] ** gamma * s[0]),
        gamma=float(gamma),
    )


def fit_limit(values: Sequence[float], gamma: float, window: Optional[Tuple[int, int]] = None,
              index_base: int = 1) -> AsymptoticFit:
    """
    Limit of (log(n+1))^gamma s_n over the window [n_lo, n_hi] of indices n,
    which must lie inside [8, N/8]; array position is n - index_base.
    """
    desc = np.sort(np.asarray(values, dtype=float))[::-1]
    N = desc.size
    n_lo, n_hi = window or default_index_window(N)
    if not (MIN_WINDOW_START <= n_lo < n_hi and n_hi <= N // 8):
        raise WindowError(f"fit window [{n_lo}, {n_hi}] must satisfy 8 <= n_lo < n_hi <= N/8 = {N // 8}")
    n = np.arange(n_lo, n_hi + 1)
    return fit_scaled_model(n, desc[n - index_base], gamma)


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------


def hilbert_schmidt_norm(matrix: Any) -> float:
    return float(np.linalg.norm(_as_matrix(matrix), "fro"))


def schatten_norm(values: Sequence[float], p: float) -> float:
    """(sum s_n^p)^{1/p}; p = inf gives the operator norm."""
    s = np.abs(np.asarray(values, dtype=float))
    if math.isinf(p):
        return float(s.max(initial=0.0))
    if p <= 0.0:
        raise DomainError(f"Schatten exponent must be positive, got {p}")
    return float(np.sum(s ** p) ** (1.0 / p))
