import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from maass_shift.modular import (
    CuspForm,
    delta_expansion,
    delta_product_expansion,
    divisor_sigma_table,
    e2_star,
    eisenstein,
    tau_values,
)
from maass_shift.numerics import PrecisionContext
from maass_shift.qseries import QSeries

CTX = PrecisionContext(128, 1e-25)


def test_known_tau_values():
    # published table of τ(n), n = 1..10
    assert tau_values(10)[1:] == [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920]


def test_fast_path_matches_product_oracle():
    assert tau_values(1500) == delta_product_expansion(1500)


def test_delta_expansion_shape():
    d = delta_expansion(50)
    assert d.weight == 12 and d.N == 50 and d.a(0) == 0 and d.a(2) == -24
    assert d.coefficient_list(3) == [0, 1, -24, 252]
    with pytest.raises(IndexError):
        d.coefficient_list(51)


def test_cusp_form_validation():
    with pytest.raises(ValueError):
        CuspForm(10, QSeries([1], 1, 5))
    with pytest.raises(ValueError):
        CuspForm(12, QSeries([1, 1], 0, 5))


def test_eisenstein_identity():
    # E₄³ - E₆² = 1728Δ
    N = 60
    e4, e6 = eisenstein(4, N).fourier, eisenstein(6, N).fourier
    lhs = e4 * e4 * e4 - e6 * e6
    assert [lhs.coefficient(n) for n in range(N + 1)] == [1728 * t for t in tau_values(N)]


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=40), st.integers(min_value=2, max_value=40))
def test_tau_multiplicative(m, n):
    import math

    t = tau_values(1600)
    if math.gcd(m, n) == 1:
        assert t[m * n] == t[m] * t[n]


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11])
def test_hecke_prime_power_recursion(p):
    t = tau_values(p**3)
    assert t[p * p] == t[p] ** 2 - p**11
    assert t[p**3] == t[p] * t[p * p] - p**11 * t[p]


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11, 13, 97, 997])
def test_ramanujan_bound(p):
    assert abs(tau_values(1000)[p]) <= 2 * p**5.5


def test_divisor_sigma():
    assert divisor_sigma_table(1, 12)[12] == 28
    assert divisor_sigma_table(3, 6)[6] == 1 + 8 + 27 + 216


def test_eisenstein_weight_check():
    with pytest.raises(ValueError):
        eisenstein(8, 10)


def test_delta_modularity():
    d = delta_expansion(200)
    tau = mp.mpc(0.13, 0.9)
    with CTX.workprec():
        lhs = d.evaluate(-1 / tau, CTX)
        rhs = tau**12 * d.evaluate(tau, CTX)
        assert abs(lhs - rhs) < mp.mpf(10) ** -20 * abs(rhs)


def test_e2_star_transforms_with_weight_two():
    tau = mp.mpc(-0.21, 1.1)
    with CTX.workprec():
        lhs = e2_star(-1 / tau, 300, CTX)
        rhs = tau**2 * e2_star(tau, 300, CTX)
        assert abs(lhs - rhs) < mp.mpf(10) ** -20
        assert abs(e2_star(tau + 1, 300, CTX) - e2_star(tau, 300, CTX)) < mp.mpf(10) ** -25
    with pytest.raises(ValueError):
        e2_star(-1j)
