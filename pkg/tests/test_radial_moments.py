import math

import numpy as np
import pytest

from lab_errors import DomainError, QuadratureRefused
from radial_moments import (
    REFUSE_POWER,
    MomentQuery,
    adaptive_gauss_legendre,
    diag_entry,
    log1mexp,
    moment,
    moment_asymptotic,
    moment_quadrature,
    moment_quadrature_rdomain,
    moment_table,
    moment_values,
    power_weight_moment,
)
from symbol_model import RadialProfile, RadialWeight


def test_adaptive_rule_on_polynomial():
    out = adaptive_gauss_legendre(lambda x: x ** 5, [0.0, 1.0, 2.0])
    assert out.converged
    assert out.value == pytest.approx(64.0 / 6.0, rel=1e-13)


@pytest.mark.parametrize("n", [0, 1, 5, 100, 10_000])
def test_gamma_zero_moments_are_exact(n):
    result = moment_quadrature(MomentQuery(n, 0.0))
    assert result.converged
    assert result.value == pytest.approx(1.0 / (n + 1), rel=1e-10)


@pytest.mark.parametrize("n", [0, 3, 40])
def test_power_kind_matches_beta(n):
    result = moment_quadrature(MomentQuery(n, 1.0, kind="power"))
    assert result.value == pytest.approx(1.0 / ((n + 1) * (n + 2)), rel=1e-10)


@pytest.mark.parametrize("n, gamma", [(50, 1.0), (1000, 1.0), (1000, 0.5), (200, 2.0)])
def test_r_domain_agrees_with_u_domain(n, gamma):
    q = MomentQuery(n, gamma)
    u_side = moment_quadrature(q)
    r_side = moment_quadrature_rdomain(q)
    assert u_side.converged
    assert r_side.value == pytest.approx(u_side.value, rel=1e-10)


def test_constant_profile_scales_moment():
    base = moment_quadrature(MomentQuery(20, 1.0)).value
    scaled = moment_quadrature(MomentQuery(20, 1.0, RadialProfile("constant", 2.0))).value
    assert scaled == pytest.approx(2.0 * base, rel=1e-12)


def test_cutoff_moment():
    result = moment_quadrature(MomentQuery(0, 0.0, cutoff=0.5))
    assert result.value == pytest.approx(0.5, rel=1e-12)


def test_quadrature_approaches_asymptotic():
    deviations = []
    for n in (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6):
        q = MomentQuery(n, 1.0)
        result = moment_quadrature(q)
        assert result.converged, result.note
        deviations.append(abs(result.value / moment_asymptotic(q).value - 1.0))
    assert deviations == sorted(deviations, reverse=True)
    assert deviations[-1] < 0.2


def test_asymptotic_value():
    q = MomentQuery(1000, 2.0, RadialProfile("inverse_one_plus_r"))
    assert moment_asymptotic(q).value == pytest.approx(0.5 / (1000 * math.log(1000) ** 2))


def test_asymptotic_rejections():
    with pytest.raises(DomainError):
        moment_asymptotic(MomentQuery(1, 1.0))
    with pytest.raises(DomainError):
        moment_asymptotic(MomentQuery(100, 1.0, cutoff=0.9))
    with pytest.raises(DomainError):
        moment_asymptotic(MomentQuery(100, 1.0, kind="power"))


def test_refusal_and_fallback():
    q = MomentQuery(REFUSE_POWER, 1.0)
    with pytest.raises(QuadratureRefused):
        moment_quadrature(q)
    assert moment(q).method == "asymptotic"


@pytest.mark.parametrize("n", [-1, 2.5])
def test_invalid_power(n):
    with pytest.raises(DomainError):
        MomentQuery(n, 1.0)


def test_diag_entry_identity_and_decay():
    assert diag_entry(7, 0.0) == pytest.approx(1.0, rel=1e-10)
    entries = [diag_entry(n, 1.0) for n in (10, 100, 1000)]
    assert entries == sorted(entries, reverse=True)


def test_diag_entry_large_index():
    value = diag_entry(10 ** 6, 1.0)
    assert abs(value * math.log(2 * 10 ** 6 + 1) - 1.0) <= 0.15


@pytest.mark.parametrize("n, gamma", [(10 ** 4, 2.0), (10 ** 5, 1.0), (2 * 10 ** 6 + 1, 0.5)])
def test_large_powers_converge(n, gamma):
    result = moment_quadrature(MomentQuery(n, gamma))
    assert result.converged, result.note
    assert result.error_estimate <= 1e-9 * result.value


def test_log1mexp_matches_direct_form():
    u = np.array([1e-3, 0.1, 0.7, 3.0, 10.0])
    assert np.allclose(log1mexp(u), np.log(1.0 - np.exp(-u)), rtol=1e-8, atol=0.0)
    assert log1mexp(np.array([40.0]))[0] == pytest.approx(-math.exp(-40.0), rel=1e-12)


@pytest.mark.parametrize("n", [1, 10, 1000])
def test_power_weight_moment_gamma_one(n):
    # 2(n+1) B(2n+2, 2) = 1 / (2n+3)
    assert power_weight_moment(n, 1.0) == pytest.approx(1.0 / (2 * n + 3), rel=1e-12)


def test_power_weight_needs_positive_gamma():
    with pytest.raises(DomainError):
        power_weight_moment(3, 0.0)


def test_moment_table_closed_forms():
    exact = moment_table(6, RadialWeight(0.0))
    assert [r.method for r in exact] == ["exact"] * 6
    assert np.allclose(moment_values(exact), 1.0 / np.arange(1, 7))
    beta = moment_table(4, RadialWeight(1.0, kind="power"))
    assert beta[2].value == pytest.approx(1.0 / 12.0)


def test_moment_table_workers_deterministic():
    radial = RadialWeight(1.0)
    serial = moment_values(moment_table(12, radial, workers=1))
    threaded = moment_values(moment_table(12, radial, workers=3))
    assert np.array_equal(serial, threaded)
