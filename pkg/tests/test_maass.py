import math

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from maass_shift.experiments import fundamental_domain_samples, make_gamma, sample_gammas, untwisted_period_polynomial
from maass_shift.maass import (
    DEFAULT_CALIBRATION_POINTS,
    HarmonicMaassForm,
    calibrate,
    delta_maass_form,
    kloosterman,
    lemma_bound_scan,
    m_minus_eval,
    period_function,
    poincare_tail_bound,
    raw_poincare_coeff,
)
from maass_shift.modular import delta_expansion, tau_values
from maass_shift.numerics import PrecisionContext, PrecisionError
from maass_shift.periods import S, T, GL2Matrix

CTX = PrecisionContext(200, 1e-40)


def _brute_kloosterman(m, n, c):
    units = [d for d in range(c) if math.gcd(d, c) == 1]
    return mp.fsum(mp.expjpi(mp.mpf(2 * (m * d + n * pow(d, -1, c))) / c) for d in units) if c > 1 else mp.mpc(1)


@settings(max_examples=40, deadline=None)
@given(st.integers(-30, 30), st.integers(-30, 30), st.integers(1, 40))
def test_kloosterman_matches_brute_force(m, n, c):
    with CTX.workprec():
        assert abs(kloosterman(m, n, c, CTX) - _brute_kloosterman(m, n, c)) < mp.mpf(10) ** -40


@settings(max_examples=30, deadline=None)
@given(st.integers(-30, 30), st.integers(-30, 30), st.integers(1, 40))
def test_kloosterman_symmetry_and_reality(m, n, c):
    with CTX.workprec():
        k = kloosterman(m, n, c, CTX)
        assert abs(k - kloosterman(n, m, c, CTX)) < mp.mpf(10) ** -40
        assert abs(k.imag) < mp.mpf(10) ** -40
        assert abs(k) <= c


def test_ramanujan_sum_special_case():
    # K(m, 0; c) is the Ramanujan sum; for m = -1 it is the Möbius function
    with CTX.workprec():
        assert abs(kloosterman(-1, 0, 30, CTX) - (-1)) < mp.mpf(10) ** -40
        assert abs(kloosterman(-1, 0, 12, CTX)) < mp.mpf(10) ** -40


def _literal_poincare(n, c_top=400):
    # the defining c-series with mpmath's Bessel I and brute-force Kloosterman sums
    with mp.workprec(200):
        x = 4 * mp.pi * mp.sqrt(n)
        s = mp.fsum(_brute_kloosterman(-1, n, c).real / c * mp.besseli(11, x / c) for c in range(1, c_top + 1))
        return -2 * mp.pi * mp.mpf(n) ** (-5.5) * s


@pytest.mark.parametrize("n", [1, 2, 10])
def test_poincare_coefficient_matches_literal_series(n):
    val = raw_poincare_coeff(n, ctx=CTX)
    oracle = _literal_poincare(n)
    assert abs(val - oracle) < 1e-15 * abs(oracle)


def test_poincare_constant_term():
    with CTX.workprec():
        assert abs(raw_poincare_coeff(0, ctx=CTX) + mp.mpf(65520) / 691) < mp.mpf(10) ** -40


def test_poincare_tail_bound_is_monotone():
    bounds = [poincare_tail_bound(100, C) for C in (10, 20, 40, 80)]
    assert all(a > b for a, b in zip(bounds, bounds[1:]))
    with pytest.raises(PrecisionError):
        raw_poincare_coeff(1000, atol=1e-26, c_max=5)


def test_uncalibrated_form_refuses_evaluation():
    hmf = delta_maass_form(calibrated=False)
    with pytest.raises(RuntimeError):
        hmf.holomorphic(2j)


def test_calibration_independent_of_point():
    lams = []
    for g, t in DEFAULT_CALIBRATION_POINTS + ((GL2Matrix(2, -1, 3, -1), 0.1 + 1.5j),):
        hmf = delta_maass_form(calibrated=False)
        lams.append(calibrate(hmf, g, t))
    for lam in lams[1:]:
        assert abs(lam - lams[0]) < mp.mpf(10) ** -25 * abs(lams[0])
    assert lams[0].imag == 0
    with pytest.raises(ValueError):
        calibrate(delta_maass_form(calibrated=False), T)


def test_shadow_round_trip(hmf):
    assert hmf.shadow_from_c_minus(60) == tau_values(60)[1:]
    assert hmf.weight == -10


def test_m_minus_periodic_and_decaying(hmf):
    with hmf.ctx.workprec():
        z = mp.mpc(mp.mpf(1) / 5, mp.mpf(4) / 5)
        a = m_minus_eval(hmf, z)
        b = m_minus_eval(hmf, z + 1)
        assert abs(a - b) < mp.mpf(10) ** -28 * abs(a)
        # dominated by the n = 1 term ~ y^{k-2} e^{-2πy}
        assert abs(m_minus_eval(hmf, mp.mpc(0, 6))) < abs(m_minus_eval(hmf, mp.mpc(0, 3)))


def test_m_minus_truncation_explicit_N(hmf):
    with hmf.ctx.workprec():
        full = m_minus_eval(hmf, mp.mpc(0.1, 1.0))
        one = m_minus_eval(hmf, mp.mpc(0.1, 1.0), N=1)
        y = mp.mpf(1)
        c1 = hmf.c_minus(1)
        expected = c1 * mp.gammainc(11, 4 * mp.pi * y) * mp.expjpi(-2 * mp.mpc(0.1, 1.0))
        assert abs(one - expected) < mp.mpf(10) ** -40
        assert abs(full - one) < abs(one)


def test_generic_shadow_needs_long_expansion():
    hmf = HarmonicMaassForm(_renamed(delta_expansion(10)))
    with pytest.raises(PrecisionError):
        m_minus_eval(hmf, 0.01j)


def _renamed(f):
    from maass_shift.modular import CuspForm

    return CuspForm(f.weight, f.fourier, "short")


def test_modularity_of_full_form(hmf):
    # M = M⁺ + M⁻ by direct summation on both sides of the transformation law
    with hmf.ctx.workprec():
        for g, t in ((S, mp.mpc(0.1, 1.2)), (make_gamma(2, 1), mp.mpc(0.05, 1.1)), (make_gamma(1, -1), mp.mpc(0.4, 0.95))):
            gt = g.act(t)
            lhs = hmf.full_direct(t)
            rhs = g.j(t) ** 10 * hmf.full_direct(gt)
            assert abs(lhs - rhs) < mp.mpf(10) ** -25 * max(abs(lhs), 1e-6)


def test_full_uses_transport_below_direct_range(hmf):
    with hmf.ctx.workprec():
        t = mp.mpc(0.3, 0.2)
        val = hmf.full(t)
        g = make_gamma(1, 0)
        assert abs(val - g.j(t) ** 10 * hmf.full(g.act(t))) < mp.mpf(10) ** -22 * abs(val)


def test_period_function_translation_vanishes(hmf):
    assert abs(period_function(hmf, T, 2j)) < mp.mpf(10) ** -25
    assert period_function(hmf, T, 2j, "twist") == 0
    with pytest.raises(ValueError):
        period_function(hmf, S, 2j, "bogus")


def test_period_function_S_matches_untwisted(hmf):
    for t in (2j, 0.5 + 2j):
        d = period_function(hmf, S, t)
        p = untwisted_period_polynomial(hmf, t)
        assert abs(d - p) < mp.mpf(10) ** -20 * abs(p)


def test_period_function_twisted(hmf):
    for g in sample_gammas(3, (2, 6), seed=11):
        d = period_function(hmf, g, 0.2 + 1.5j)
        p = period_function(hmf, g, 0.2 + 1.5j, "twist")
        assert abs(d - p) < mp.mpf(10) ** -20 * max(abs(p), 1)


def test_lemma_scan_finite_and_validates(hmf):
    C = lemma_bound_scan(hmf, sample_gammas(4, (1, 8), seed=4), fundamental_domain_samples(3, seed=1))
    assert mp.isfinite(C) and C > 0
    with pytest.raises(ValueError):
        lemma_bound_scan(hmf, [S], [0.2 + 0.5j])
    with pytest.raises(ValueError):
        lemma_bound_scan(hmf, [T], [2j])
