import json
import math

import numpy as np
import pytest

from lab_errors import DomainError, WindowError
from operator_assembly import assemble_arc_family
from spectra import hilbert_schmidt_norm
from symbol_model import ConstantFactor, RadialWeight, SeparableSymbol
from theory_checks import (
    SyntheticOperator,
    check_compact_support_decay,
    check_counting_equivalence,
    check_jacobi_oracle,
    check_lemma44,
    check_log_decay_functionals,
    check_p1_subadditivity,
    check_p2_kyfan,
    check_p3_products,
    check_p4_random,
    check_psi0_bound,
    check_truncation_stability,
    check_weyl_inequalities,
    cross_term_diagnostic,
    lemma44_log_sides,
    psi0,
)

LENGTH = 10_000


def test_synthetic_operator_sorted():
    op = SyntheticOperator(np.array([0.1, -3.0, 2.0]))
    assert list(op.values) == [3.0, 2.0, 0.1]
    assert len(SyntheticOperator.finite_rank(10, 3, 2.0)) == 10


@pytest.mark.parametrize("C, gamma", [(1.0, 1.0), (2.0, 1.0), (1.0, 2.0)])
def test_log_decay_functionals(C, gamma):
    verdict = check_log_decay_functionals(C, gamma, length=10 ** 5)
    assert verdict.passed, verdict.metrics
    assert verdict.metrics["expected"] == pytest.approx(C ** (1.0 / gamma))


def test_counting_equivalence():
    verdict = check_counting_equivalence(1.0, length=10 ** 5)
    assert verdict.passed
    assert verdict.metrics["inside"]["sequence_bounded"]
    assert not verdict.metrics["outside"]["counting_bounded"]


def test_p1_aligned_and_common_unitary_agree():
    a = SyntheticOperator.log_decay(128, 1.0, 1.0)
    b = SyntheticOperator.log_decay(128, 2.0, 1.0)
    aligned = check_p1_subadditivity(a, b, 1.0)
    common = check_p1_subadditivity(a, b, 1.0, mode="common_unitary", seed=4)
    assert aligned.passed and common.passed
    assert common.metrics["Delta_sum"] == pytest.approx(aligned.metrics["Delta_sum"], rel=1e-8)


def test_p1_rejects_unknown_mode():
    a = SyntheticOperator.log_decay(32)
    with pytest.raises(DomainError):
        check_p1_subadditivity(a, a, 1.0, mode="sideways")


def test_p2_exponential_perturbation_is_invisible():
    a = SyntheticOperator.log_decay(LENGTH, 1.0, 1.0)
    b = SyntheticOperator.exponential(LENGTH)
    verdict = check_p2_kyfan(a, b, 1.0, seed=0)
    assert verdict.passed, verdict.metrics


def test_p3_product_bound():
    a = SyntheticOperator.log_decay(LENGTH, 1.0, 1.0)
    b = SyntheticOperator.log_decay(LENGTH, 2.0, 1.0)
    verdict = check_p3_products(a, b, 1.0)
    assert verdict.passed
    assert verdict.metrics["Delta_2gamma_AB"] <= verdict.metrics["bound"]


def test_p3_zero_factor_needs_vanishing_product():
    a = SyntheticOperator.log_decay(LENGTH, 1.0, 1.0)
    verdict = check_p3_products(a, SyntheticOperator.zero(LENGTH), 1.0)
    assert verdict.passed
    assert verdict.metrics["factor_in_sigma0"]


def test_p4_random_families():
    verdict = check_p4_random(families=20, max_L=3, max_dim=6, seed=1)
    assert verdict.passed, verdict.metrics["failures"]


def test_lemma44_no_violations():
    verdict = check_lemma44(l_values=(2, 3), samples=5_000, seed=6)
    assert verdict.passed
    assert verdict.metrics["violations"] == 0


def test_lemma44_equal_entries():
    # all r equal: LHS = (2r)^{2l}, RHS = r^{2l}
    log_lhs, log_rhs = lemma44_log_sides(np.full(6, 0.5))
    assert log_lhs - log_rhs == pytest.approx(6 * np.log(2.0))


def test_lemma44_validation():
    with pytest.raises(DomainError):
        lemma44_log_sides(np.ones(3))
    with pytest.raises(DomainError):
        lemma44_log_sides(np.array([1.0, 0.0, 1.0, 1.0]))


def test_psi0_corrected_and_printed():
    assert psi0(2.0, 1.0) == 1.0
    assert psi0(np.exp(-1.0), 1.0) == pytest.approx(0.5)
    good = check_psi0_bound(1.0, samples=2_000, seed=3)
    assert good.passed
    printed = check_psi0_bound(1.0, samples=2_000, seed=3, printed_form=True)
    assert not printed.passed
    assert printed.metrics["printed_violations"] + printed.metrics["printed_undefined"] > 0


def test_weyl_inequalities():
    verdict = check_weyl_inequalities(pairs=20, max_dim=8, seed=7)
    assert verdict.passed, verdict.metrics


def test_jacobi_oracle():
    verdict = check_jacobi_oracle(matrices=5, max_dim=8, seed=2)
    assert verdict.passed, verdict.metrics


def test_compact_support_rate():
    verdict = check_compact_support_decay(0.5, 64)
    assert verdict.passed, verdict.metrics
    assert verdict.metrics["exponential"]


def test_compact_support_without_cutoff_is_not_exponential():
    verdict = check_compact_support_decay(0.5, 64, cutoff=False)
    assert verdict.passed
    assert not verdict.metrics["exponential"]


@pytest.mark.parametrize("delta", [0.0, 0.51, 0.7])
def test_compact_support_delta_range(delta):
    with pytest.raises(DomainError):
        check_compact_support_decay(delta, 32)


def test_compact_support_half_disk_at_desk_size():
    verdict = check_compact_support_decay(0.5, 128)
    assert verdict.passed, verdict.metrics
    assert verdict.metrics["slope"] == pytest.approx(2.0 * math.log(0.5), rel=0.10)


def test_compact_support_small_delta_is_shallower():
    steep = check_compact_support_decay(0.5, 64).metrics["slope"]
    shallow = check_compact_support_decay(0.25, 64).metrics["slope"]
    assert steep < shallow < 0.0


def test_truncation_stability_of_diagonal_operator():
    sym = SeparableSymbol(ConstantFactor(1.0), RadialWeight(1.0))
    verdict = check_truncation_stability(sym, 32, count=16)
    assert verdict.passed
    assert verdict.metrics["max_rel_diff"] < 1e-12


def test_cross_term_structure():
    report = cross_term_diagnostic(L=4, gamma=1.0, N=64, window=(4, 16))
    assert len(report.pairs) == 6
    assert sum(p["adjacent"] for p in report.pairs) == 4
    far = [p for p in report.pairs if not p["adjacent"]]
    assert {(p["j"], p["k"]) for p in far} == {(1, 3), (2, 4)}
    assert all("hs_rel_change" in p for p in far)
    record = report.verdict().to_dict()
    assert record["check"] == "cross_terms"
    json.dumps(record)


def test_cross_term_argument_checks():
    with pytest.raises(DomainError):
        cross_term_diagnostic(L=2, N=64)
    with pytest.raises(WindowError):
        cross_term_diagnostic(L=3, N=64, window=(16, 100))


def test_verdict_record_shape():
    record = check_lemma44(l_values=(2,), samples=100, seed=0).to_dict()
    assert set(record) == {"check", "params", "seed", "pass", "metrics"}
    assert isinstance(record["pass"], bool)


def test_cross_terms_are_symmetric_in_the_pair():
    family = assemble_arc_family(4, 1.0, 32)
    A = family.blocks
    for j, k in [(0, 1), (0, 2), (1, 3)]:
        assert np.allclose(A[j], A[j].conj().T, rtol=0.0, atol=1e-14)
        forward = hilbert_schmidt_norm(A[k].conj().T @ A[j])
        backward = hilbert_schmidt_norm(A[j].conj().T @ A[k])
        assert backward == pytest.approx(forward, rel=1e-12)
        assert np.allclose(A[k] @ A[j].conj().T, A[k] @ A[j], rtol=0.0, atol=1e-14)
