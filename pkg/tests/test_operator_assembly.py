import math

import numpy as np
import pytest

from lab_errors import AssemblyError, BudgetError, DimensionMismatchError, DomainError, PreconditionError
from operator_assembly import (
    DENSE_LIMIT,
    BlockFamily,
    assemble_arc_family,
    assemble_banded,
    assemble_step_decomposition,
    assemble_toeplitz,
    banded_minus_toeplitz,
    block_diagonal,
    block_embed_products,
)
from radial_moments import MomentQuery, moment_quadrature
from spectra import singular_values
from symbol_model import (
    ArcPartition,
    ConstantFactor,
    RadialWeight,
    SampledContinuous,
    SeparableSymbol,
    StepFunction,
    TrigPolynomial,
    eval_symbol,
)


def _sym(angular, gamma=0.0):
    return SeparableSymbol(angular, RadialWeight(gamma))


def test_constant_symbol_gamma_zero_is_identity():
    T = assemble_toeplitz(_sym(ConstantFactor(1.0)), 32)
    assert T.hermitian
    assert np.allclose(T.entries, np.eye(32), atol=1e-12)


def test_entry_formula():
    # phi_1 hat(-1) = 1, M(2) = 1/3 when gamma = 0
    T = assemble_toeplitz(_sym(TrigPolynomial((1.0, 2.0, 3.0))), 4)
    assert not T.hermitian
    assert T.entries[0, 1] == pytest.approx(2.0 * math.sqrt(2.0) / 3.0)
    assert T.entries[1, 0] == pytest.approx(3.0 * 2.0 * math.sqrt(2.0) / 3.0)
    assert T.entries[0, 2] == 0.0


def test_real_trig_symbol_is_hermitian_and_banded():
    T = assemble_toeplitz(_sym(TrigPolynomial((0.5, 2.0, 0.5)), 1.0), 24).entries
    assert np.array_equal(T, T.conj().T)
    assert np.max(np.abs(np.triu(T, 2))) == 0.0


def test_entries_are_read_only():
    T = assemble_toeplitz(_sym(ConstantFactor(1.0)), 4)
    with pytest.raises(ValueError):
        T.entries[0, 0] = 2.0


def test_row_blocks_independent_of_workers():
    sym = _sym(TrigPolynomial((0.5, 0.0, 1.0, 0.0, 0.5)))
    serial = assemble_toeplitz(sym, 600, workers=1).entries
    threaded = assemble_toeplitz(sym, 600, workers=4).entries
    assert np.array_equal(serial, threaded)


def test_dimension_limits():
    sym = _sym(ConstantFactor(1.0))
    with pytest.raises(DomainError):
        assemble_toeplitz(sym, 0)
    with pytest.raises(BudgetError):
        assemble_toeplitz(sym, DENSE_LIMIT + 1)
    with pytest.raises(AssemblyError):
        assemble_toeplitz(sym, 8, moments=np.ones(10))


def test_sampled_grid_must_cover_dimension():
    with pytest.raises(AssemblyError):
        assemble_toeplitz(_sym(SampledContinuous.preset("cos", 64)), 32)


def test_arc_family_sums_to_radial_operator():
    family = assemble_arc_family(4, 1.0, 24)
    assert family.L == 4 and family.N == 24
    radial = assemble_toeplitz(_sym(ConstantFactor(1.0), 1.0), 24).entries
    assert np.allclose(sum(family.blocks), radial, atol=1e-12)


def test_step_decomposition_matches_direct_assembly():
    step = StepFunction.uniform([2.0, -1.0, 0.5])
    radial = RadialWeight(1.0)
    pairs = assemble_step_decomposition(step, radial, 20)
    combined = sum(c * T for c, T in pairs)
    direct = assemble_toeplitz(SeparableSymbol(step, radial), 20).entries
    assert np.allclose(combined, direct, atol=1e-12)


def test_step_decomposition_needs_partition_from_zero():
    with pytest.raises(PreconditionError):
        assemble_step_decomposition(StepFunction.uniform([1.0, 0.0], start=1.0), RadialWeight(1.0), 8)


def test_block_products(rng):
    blocks = tuple(rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)) for _ in range(3))
    products = block_embed_products(BlockFamily(blocks))
    assert products.gram.shape == (15, 15)
    assert products.embedded.shape == (5, 15)
    assert np.allclose(products.sum_A, blocks[0] + blocks[1] + blocks[2])
    assert np.trace(products.gram).real == pytest.approx(np.trace(products.cogram).real)


def test_block_diagonal_layout(rng):
    blocks = (rng.standard_normal((3, 3)), rng.standard_normal((3, 3)))
    A0 = block_diagonal(BlockFamily(blocks))
    assert A0.shape == (6, 6)
    assert np.array_equal(A0[3:, 3:], blocks[1])
    assert not np.any(A0[:3, 3:])


def test_block_family_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        BlockFamily((np.eye(2), np.eye(3)))
    with pytest.raises(DimensionMismatchError):
        BlockFamily(())


def test_banded_storage():
    D = assemble_banded(6, [1.0, 2.0, 1.0], 1.0)
    assert D.is_tridiagonal
    assert np.allclose(D.diagonal(0), 2.0 / np.log(np.arange(6) + 2.0))
    dense = D.to_dense()
    assert dense[0, 1] == pytest.approx(1.0 / math.log(2.0))
    assert dense[1, 0] == pytest.approx(1.0 / math.log(3.0))
    assert dense[0, 5] == 0.0


def test_banded_symbol_orientation():
    D = assemble_banded(4, [1.0, 2.0, 3.0], 0.0)
    assert D.symbol().coefficient(1) == 1.0
    assert D.to_dense()[1, 0] == 1.0


def test_banded_tridiagonal_parts():
    D = assemble_banded(5, [1.0, 2.0, 1.0], 1.0)
    main, off = D.tridiagonal_parts()
    decay = 1.0 / np.log(np.arange(5) + 2.0)
    assert np.allclose(off, np.sqrt(decay[:-1] * decay[1:]))
    assert np.allclose(main, 2.0 * decay)


def test_banded_negative_products_rejected():
    with pytest.raises(PreconditionError):
        assemble_banded(5, [-1.0, 0.0, 1.0], 1.0).tridiagonal_parts()


@pytest.mark.parametrize("kwargs", [
    {"coefficients": [1.0, 2.0]},
    {"offset": 1},
    {"perturbation": "wild"},
    {"coefficients": [1.0] * 11},
])
def test_banded_validation(kwargs):
    args = {"N": 5, "coefficients": [1.0, 2.0, 1.0], "gamma": 1.0, **kwargs}
    with pytest.raises(DomainError):
        assemble_banded(**args)


def test_banded_minus_toeplitz_gamma_zero_diagonal_vanishes():
    diff = banded_minus_toeplitz(assemble_banded(16, [1.0, 2.0, 3.0], 0.0))
    assert np.max(np.abs(np.diag(diff))) < 1e-12
    assert np.max(np.abs(np.triu(diff, 2))) == 0.0
    sub = np.abs(np.diag(diff, -1))
    assert np.all(np.diff(sub) < 0.0)


def test_arc_coefficients_rotate_with_the_arc():
    ks = np.arange(-10, 11)
    first = ArcPartition(4, 1).indicator().fourier_coefficients(ks)
    for j in range(2, 5):
        rotated = ArcPartition(4, j).indicator().fourier_coefficients(ks)
        phase = np.exp(-1j * ks * 2.0 * np.pi * (j - 1) / 4)
        assert np.allclose(rotated, phase * first, rtol=0.0, atol=1e-12)


def test_arc_family_is_unitarily_equivalent():
    family = assemble_arc_family(4, 1.0, 64)
    base = singular_values(family.blocks[0]).values
    m = np.arange(64)
    for j, block in enumerate(family.blocks[1:], start=1):
        values = singular_values(block).values
        assert np.max(np.abs(values - base)) <= 1e-8 * base[0]
        U = np.exp(-1j * m * 2.0 * np.pi * j / 4)
        assert np.allclose(block, U[:, None] * family.blocks[0] * U.conj()[None, :], rtol=0.0, atol=1e-10)


@pytest.mark.parametrize("angular", [
    TrigPolynomial((0.5, 2.0, 0.5)),
    StepFunction.uniform([1.0, 0.5]),
    TrigPolynomial((0.0, 0.0, 1.0j)),
])
def test_truncations_are_nested(angular):
    sym = _sym(angular, gamma=1.0)
    small = assemble_toeplitz(sym, 24).entries
    big = assemble_toeplitz(sym, 48).entries
    assert np.array_equal(small, big[:24, :24])


def test_entries_match_area_integral_sampling():
    # T[m, n] = (1/pi) int_D phi e_n conj(e_m) dA, sampled uniformly on the disk
    sym = _sym(TrigPolynomial((0.0, 0.0, 1.0)), gamma=1.0)
    T = assemble_toeplitz(sym, 4).entries
    rng = np.random.default_rng(17)
    samples = 400_000
    r = np.sqrt(rng.uniform(0.0, 1.0, samples))
    theta = rng.uniform(0.0, 2.0 * np.pi, samples)
    z = r * np.exp(1j * theta)
    phi = eval_symbol(sym, r, theta)

    def sampled_entry(m, n):
        e_n = np.sqrt(n + 1.0) * z ** n
        e_m = np.sqrt(m + 1.0) * z ** m
        return complex(np.mean(phi * e_n * np.conj(e_m)))

    for m, n in [(1, 0), (2, 1), (3, 2)]:
        expected = 2.0 * math.sqrt((m + 1) * (n + 1)) * moment_quadrature(MomentQuery(m + n + 1, 1.0)).value
        assert T[m, n] == pytest.approx(expected, rel=1e-10)
        assert abs(sampled_entry(m, n) - T[m, n]) <= 0.02 * abs(T[m, n])
    assert T[0, 1] == 0.0
    assert abs(sampled_entry(0, 1)) <= 0.01
