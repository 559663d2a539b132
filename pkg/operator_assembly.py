"""
operator_assembly.py

Finite sections of Toeplitz operators on the Bergman space in the basis
e_n = sqrt(n+1) z^n, plus the block constructions and banded matrices used by
the experiments.

Matrix entries:

    T[m, n] = 2 sqrt((m+1)(n+1)) * phi_1 hat(m - n) * M(m + n + 1),

where M(p) = int_0^1 r^p phi_0(r) g(r) dr. Entries depend on m + n only
through M, so one moment table of length 2N is computed per radial weight and
shared by every row block.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from lab_errors import AssemblyError, BudgetError, DimensionMismatchError, DomainError, PreconditionError
from radial_moments import moment_table, moment_values
from symbol_model import (
    AngularFactor,
    ArcPartition,
    RadialProfile,
    RadialWeight,
    SampledContinuous,
    SeparableSymbol,
    StepFunction,
    TrigPolynomial,
    arc_restriction,
    validate_gamma,
)

logger = logging.getLogger(__name__)

DENSE_LIMIT = 8192
ROW_BLOCK = 512


@dataclass(frozen=True, eq=False)
class ToeplitzTruncation:
    """N x N section P_N T_phi P_N."""

    N: int
    entries: np.ndarray
    symbol_meta: Dict[str, Any]
    hermitian: bool

    def leading(self, n: int) -> np.ndarray:
        return self.entries[:n, :n]


def fourier_table(angular: AngularFactor, N: int) -> np.ndarray:
    """phi_1 hat(k) for k = -(N-1)..(N-1), index k + N - 1."""
    if isinstance(angular, SampledContinuous) and angular.grid < 4 * N:
        raise AssemblyError(
            f"sampled angular factor on {angular.grid} points cannot assemble N={N}; need grid >= {4 * N}"
        )
    ks = np.arange(-(N - 1), N)
    return angular.fourier_coefficients(ks)


def radial_moments_for(radial: RadialWeight, N: int, workers: int = 1) -> np.ndarray:
    """M(p) for p = 0..2N-1."""
    return moment_values(moment_table(2 * N, radial, workers=workers))


def _fill_rows(out: np.ndarray, rows: range, coeffs: np.ndarray, moments: np.ndarray) -> None:
    N = out.shape[1]
    n = np.arange(N)
    m = np.arange(rows.start, rows.stop)
    k_idx = (m[:, None] - n[None, :]) + (N - 1)
    p_idx = m[:, None] + n[None, :] + 1
    scale = 2.0 * np.sqrt((m[:, None] + 1.0) * (n[None, :] + 1.0))
    out[rows.start:rows.stop, :] = scale * coeffs[k_idx] * moments[p_idx]


def _assemble(angular: AngularFactor, moments: np.ndarray, N: int, workers: int) -> np.ndarray:
    coeffs = fourier_table(angular, N)
    entries = np.empty((N, N), dtype=complex)
    blocks = [range(start, min(start + ROW_BLOCK, N)) for start in range(0, N, ROW_BLOCK)]
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda rows: _fill_rows(entries, rows, coeffs, moments), blocks))
    else:
        for rows in blocks:
            _fill_rows(entries, rows, coeffs, moments)
    return entries


def _truncation(sym: SeparableSymbol, entries: np.ndarray, N: int) -> ToeplitzTruncation:
    hermitian = sym.angular.is_real()
    if hermitian:
        skew = float(np.max(np.abs(entries - entries.conj().T), initial=0.0))
        scale = max(1.0, float(np.max(np.abs(entries), initial=0.0)))
        if skew > 1e-10 * scale:
            raise AssemblyError(f"real symbol produced a non-Hermitian matrix (skew {skew:.3e})")
        entries = 0.5 * (entries + entries.conj().T)
    entries.setflags(write=False)
    return ToeplitzTruncation(N=N, entries=entries, symbol_meta=sym.describe(), hermitian=hermitian)


def _check_dimension(N: int) -> None:
    if int(N) < 1:
        raise DomainError(f"truncation dimension must be >= 1, got {N}")
    if N > DENSE_LIMIT:
        raise BudgetError(f"dense assembly limited to N <= {DENSE_LIMIT}, got {N}")


def assemble_toeplitz(sym: SeparableSymbol, N: int, workers: int = 1,
                      moments: Optional[np.ndarray] = None) -> ToeplitzTruncation:
    """Assemble the N x N section of T_phi; ``moments`` may be a precomputed table of length >= 2N."""
    _check_dimension(N)
    if moments is None:
        moments = radial_moments_for(sym.radial, N, workers)
    elif len(moments) < 2 * N:
        raise AssemblyError(f"moment table of length {len(moments)} too short for N={N}")
    entries = _assemble(sym.angular, moments, N, workers)
    logger.debug("assembled %dx%d truncation for %s", N, N, sym.angular.family)
    return _truncation(sym, entries, N)


@dataclass(frozen=True, eq=False)
class BlockFamily:
    """L operators A_1..A_L on a common N-dimensional space."""

    blocks: Tuple[np.ndarray, ...]
    labels: Tuple[str, ...] = ()

    def __post_init__(self):
        blocks = tuple(np.asarray(b.entries if isinstance(b, ToeplitzTruncation) else b) for b in self.blocks)
        if not blocks:
            raise DimensionMismatchError("block family needs at least one block")
        shape = blocks[0].shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise DimensionMismatchError(f"blocks must be square, got {shape}")
        for i, b in enumerate(blocks):
            if b.shape != shape:
                raise DimensionMismatchError(f"block {i} has shape {b.shape}, expected {shape}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def L(self) -> int:
        return len(self.blocks)

    @property
    def N(self) -> int:
        return self.blocks[0].shape[0]


def assemble_arc_family(L: int, gamma: float, N: int, profile: Optional[RadialProfile] = None,
                        workers: int = 1) -> BlockFamily:
    """T_{chi_1}, ..., T_{chi_L} for the uniform partition, sharing one moment table."""
    if int(L) < 1:
        raise DomainError(f"arc family needs L >= 1, got {L}")
    _check_dimension(N)
    gamma = validate_gamma(gamma)
    symbols = [arc_restriction(ArcPartition(L, j), gamma, profile) for j in range(1, L + 1)]
    moments = radial_moments_for(symbols[0].radial, N, workers)
    blocks = [assemble_toeplitz(sym, N, workers, moments=moments).entries for sym in symbols]
    return BlockFamily(tuple(blocks), tuple(f"arc {j}/{L}" for j in range(1, L + 1)))


def assemble_step_decomposition(step: StepFunction, radial: RadialWeight, N: int,
                                workers: int = 1) -> List[Tuple[complex, np.ndarray]]:
    """
    Pairs (c_j, T_{chi_j phi_0}) for a step function on a uniform partition.

    The breakpoints must be 2 pi j / L starting at 0.
    """
    L = step.pieces
    expected = np.array([2.0 * np.pi * j / L for j in range(L + 1)])
    if not np.allclose(np.array(step.breakpoints), expected, rtol=0.0, atol=1e-12):
        raise PreconditionError("arc decomposition needs a step function on the uniform partition from 0")
    _check_dimension(N)
    moments = radial_moments_for(radial, N, workers)
    pairs = []
    for j, value in enumerate(step.values, start=1):
        sym = SeparableSymbol(ArcPartition(L, j).indicator(), radial)
        pairs.append((value, assemble_toeplitz(sym, N, workers, moments=moments).entries))
    return pairs


class BlockProducts(NamedTuple):
    sum_A: np.ndarray
    gram: np.ndarray
    cogram: np.ndarray
    embedded: np.ndarray


def block_embed_products(family: BlockFamily) -> BlockProducts:
    """
    With JA_0 = [A_1 ... A_L] (N x LN):

    gram = (JA_0)^* JA_0, whose (j, k) block is A_j^* A_k,
    cogram = JA_0 (JA_0)^* = sum_k A_k A_k^*.
    """
    blocks = family.blocks
    embedded = np.hstack(blocks)
    sum_A = np.sum(np.stack(blocks), axis=0)
    gram = embedded.conj().T @ embedded
    cogram = np.zeros_like(sum_A, dtype=np.result_type(sum_A, complex))
    for A in blocks:
        cogram = cogram + A @ A.conj().T
    return BlockProducts(sum_A=sum_A, gram=gram, cogram=cogram, embedded=embedded)


def block_diagonal(family: BlockFamily) -> np.ndarray:
    """A_0 = diag{A_1, ..., A_L}."""
    N, L = family.N, family.L
    out = np.zeros((L * N, L * N), dtype=np.result_type(*family.blocks, float))
    for i, A in enumerate(family.blocks):
        out[i * N:(i + 1) * N, i * N:(i + 1) * N] = A
    return out


# ---------------------------------------------------------------------------
# Banded matrices with logarithmically decaying entries
# ---------------------------------------------------------------------------

PERTURBATIONS = ("none", "inverse_log")


@dataclass(frozen=True)
class BandedMatrix:
    """
    d_{m, m+j} = b_j / log(m + m0)^gamma * (1 + eps(m)) for |j| <= h.

    ``diagonals[j + h, m]`` holds d_{m, m+j}; slots with m + j outside
    0..N-1 are zero.
    """

    N: int
    coefficients: Tuple[complex, ...]
    gamma: float
    offset: int = 2
    perturbation: str = "none"
    diagonals: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def half_bandwidth(self) -> int:
        return (len(self.coefficients) - 1) // 2

    def diagonal(self, j: int) -> np.ndarray:
        """Entries d_{m, m+j} for the valid rows m."""
        h = self.half_bandwidth
        if abs(j) > h:
            return np.zeros(self.N - abs(j), dtype=complex)
        row = self.diagonals[j + h]
        return row[:self.N - j] if j >= 0 else row[-j:]

    def to_dense(self) -> np.ndarray:
        if self.N > DENSE_LIMIT:
            raise BudgetError(f"dense banded matrix limited to N <= {DENSE_LIMIT}, got {self.N}")
        out = np.zeros((self.N, self.N), dtype=complex)
        h = self.half_bandwidth
        for j in range(-h, h + 1):
            vals = self.diagonal(j)
            rows = np.arange(self.N - j) if j >= 0 else np.arange(-j, self.N)
            out[rows, rows + j] = vals
        return out

    def symbol(self) -> TrigPolynomial:
        """phi_{1,b} in the orientation of the Toeplitz entries: coefficient at k is b_{-k}."""
        return TrigPolynomial(tuple(reversed(self.coefficients)))

    @property
    def is_tridiagonal(self) -> bool:
        return self.half_bandwidth <= 1

    def tridiagonal_parts(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Real symmetric tridiagonal matrix similar to D.

        The diagonal similarity gives off-diagonal sqrt(d_{m,m+1} d_{m+1,m}),
        which requires real entries with non-negative products.
        """
        if not self.is_tridiagonal:
            raise PreconditionError("tridiagonal path needs half bandwidth <= 1")
        main = self.diagonal(0)
        if np.max(np.abs(main.imag), initial=0.0) > 1e-12:
            raise PreconditionError("tridiagonal path needs a real main diagonal")
        if self.half_bandwidth == 0:
            return main.real.copy(), np.zeros(max(self.N - 1, 0))
        upper, lower = self.diagonal(1), self.diagonal(-1)
        product = upper * lower
        if np.max(np.abs(product.imag), initial=0.0) > 1e-12 or np.any(product.real < 0.0):
            raise PreconditionError("off-diagonal products must be real and non-negative")
        return main.real.copy(), np.sqrt(product.real)


def _perturbation(kind: str, rows: np.ndarray, offset: int) -> np.ndarray:
    if kind == "inverse_log":
        return 1.0 / np.log(rows + offset)
    return np.zeros_like(rows, dtype=float)


def assemble_banded(N: int, coefficients: Sequence[complex], gamma: float, offset: int = 2,
                    perturbation: str = "none") -> BandedMatrix:
    """Band storage of D; ``coefficients`` are (b_{-h}, ..., b_h)."""
    coeffs = tuple(complex(c) for c in coefficients)
    if len(coeffs) % 2 != 1:
        raise DomainError("banded coefficients must be indexed -h..h")
    h = (len(coeffs) - 1) // 2
    if N < 1 or h > N - 1:
        raise DomainError(f"half bandwidth {h} must be <= N-1 = {N - 1}")
    if offset < 2:
        raise DomainError(f"index offset m0 must be >= 2, got {offset}")
    if perturbation not in PERTURBATIONS:
        raise DomainError(f"unknown perturbation '{perturbation}', expected one of {PERTURBATIONS}")
    gamma = validate_gamma(gamma)

    rows = np.arange(N, dtype=float)
    decay = np.log(rows + offset) ** (-gamma) * (1.0 + _perturbation(perturbation, rows, offset))
    diagonals = np.zeros((2 * h + 1, N), dtype=complex)
    for j in range(-h, h + 1):
        valid = (rows + j >= 0) & (rows + j <= N - 1)
        diagonals[j + h] = np.where(valid, coeffs[j + h] * decay, 0.0)
    diagonals.setflags(write=False)
    return BandedMatrix(N, coeffs, gamma, offset, perturbation, diagonals)


def banded_minus_toeplitz(banded: BandedMatrix, N: Optional[int] = None, workers: int = 1) -> np.ndarray:
    """D - P_N T_phi P_N with phi = phi_{1,b} phi_0 and the same gamma."""
    N = banded.N if N is None else int(N)
    if N > banded.N:
        raise DimensionMismatchError(f"difference dimension {N} exceeds banded dimension {banded.N}")
    sym = SeparableSymbol(banded.symbol(), RadialWeight(banded.gamma))
    D = _dense_leading(banded, N)
    T = assemble_toeplitz(sym, N, workers).entries
    return D - T


def _dense_leading(banded: BandedMatrix, N: int) -> np.ndarray:
    """Leading N x N block without densifying the full band."""
    small = assemble_banded(N, banded.coefficients, banded.gamma, banded.offset, banded.perturbation)
    return small.to_dense()

