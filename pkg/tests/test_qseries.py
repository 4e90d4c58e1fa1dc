import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from maass_shift.numerics import PrecisionContext, PrecisionError
from maass_shift.qseries import QSeries, evaluate, multiply

coeffs = st.lists(st.integers(min_value=-50, max_value=50), min_size=1, max_size=8)


def series(cs, n_min=0, order=None):
    return QSeries(cs, n_min, order if order is not None else n_min + len(cs) - 1)


def test_pole_times_delta_head():
    # q^{-1}·(q - 24q² + 252q³) = 1 - 24q + 252q²
    pole = QSeries.monomial(-1)
    head = QSeries([1, -24, 252], 1, 3)
    prod = pole * head
    assert prod.n_min == 0
    assert prod.coefficients(0, 2) == [1, -24, 252]
    assert prod.truncation_order == 2


def test_coefficient_beyond_order_raises():
    s = series([1, 2, 3])
    with pytest.raises(IndexError):
        s.coefficient(5)
    assert s.coefficient(-3) == 0


def test_truncation_order_tracks_product():
    a = QSeries([1, 1], 0, 10)
    b = QSeries([1], -1, 4)
    assert multiply(a, b).truncation_order == min(10 - 1, 4 + 0)


@settings(max_examples=50, deadline=None)
@given(coeffs, coeffs, coeffs)
def test_ring_axioms(a, b, c):
    A, B, C = series(a), series(b, 1), series(c, -1)
    assert A * B == B * A
    assert (A * B) * C == A * (B * C)
    assert A * (B + C) == A * B + A * C
    assert A - A == A.scale(0)


def test_json_round_trip_exact_and_float():
    s = QSeries([3, -7, 10**40], -1, 1)
    assert QSeries.from_json(s.to_json()) == s
    with mp.workprec(200):
        t = QSeries([mp.mpf(1) / 3, mp.mpc(2, -1)], 0, 1)
        back = QSeries.from_json(t.to_json(digits=60), PrecisionContext(200))
        assert abs(back.coefficient(0) - mp.mpf(1) / 3) < mp.mpf(10) ** -55


def test_evaluate_geometric_series():
    ctx = PrecisionContext(128, 1e-20)
    s = QSeries([1] * 80, 0, None)
    tau = mp.mpc(0.1, 1.0)
    with ctx.workprec():
        q = mp.expjpi(2 * tau)
        expected = (1 - q**80) / (1 - q)
        assert abs(evaluate(s, tau, ctx) - expected) < mp.mpf(10) ** -30


def test_evaluate_raises_on_short_expansion():
    s = QSeries([1] * 5, 0, 4)
    with pytest.raises(PrecisionError):
        evaluate(s, 0.05j, PrecisionContext(128, 1e-20))


def test_evaluate_rejects_lower_half_plane():
    with pytest.raises(ValueError):
        evaluate(series([1]), -1j)
