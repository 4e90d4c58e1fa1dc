"""Symmetrized shifted convolution values D̂(f₁, f₂, h; k-1) by three routes.

* direct: the defining Dirichlet series at s = k-1, summed with Abel or
  Cesàro acceleration;
* mock: coefficients of the mock modular form M⁺ times f₂, corrected by E₂;
* projection: the h-th coefficient of the regularized holomorphic projection
  of M⁻·f₂.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np
from scipy import special

from .maass import HarmonicMaassForm
from .modular import CuspForm, divisor_sigma_table, tau_values
from .numerics import (
    ConvergenceError,
    PrecisionContext,
    integrate_semiline,
    richardson_limit,
)
from .qseries import QSeries

__all__ = [
    "ShiftedValue",
    "ROUTES",
    "direct_dhat",
    "mock_dhat",
    "mock_dhat_many",
    "projection_dhat",
    "generating_function",
    "generating_constant_term",
    "mock_cancellation_ratio",
]

ROUTES = ("direct", "mock", "projection")

ABEL_EPSILONS = (0.2, 0.1, 0.05)
PROJECTION_S = (0.016, 0.008, 0.004, 0.002, 0.001)


@dataclass(frozen=True)
class ShiftedValue:
    h: int
    value: mp.mpf
    route: str
    error_estimate: float
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.route not in ROUTES:
            raise ValueError(f"unknown route {self.route!r}")
        if not self.error_estimate > 0:
            raise ValueError("error_estimate must be positive")


def _coeffs(f: CuspForm, N: int) -> list[int]:
    if f.name == "delta":
        return tau_values(N)
    if N > f.N:
        raise IndexError(f"form known only through q^{f.N}, q^{N} requested")
    return f.coefficient_list(N)


# --- direct route -------------------------------------------------------------------


def _normalized(f: CuspForm, N: int) -> np.ndarray:
    """a(n)/n^{(k-1)/2} as float64, index 0 unused."""
    a = _coeffs(f, N)
    n = np.arange(N + 1, dtype=float)
    out = np.zeros(N + 1)
    w = (f.weight - 1) / 2
    out[1:] = np.array([float(x) for x in a[1:]]) / n[1:] ** w
    return out


def _paired_terms(l1: np.ndarray, l2: np.ndarray, h: int, N: int, w: float, s: float) -> np.ndarray:
    """m-th term a₁(m+h)a₂(m)m^{-s} - a₁(m)a₂(m+h)(m+h)^{-s}, m = 1..N."""
    m = np.arange(1, N + 1, dtype=float)
    lm, lmh = np.log(m), np.log(m + h)
    up = l1[h + 1 : N + h + 1] * l2[1 : N + 1] * np.exp(w * lmh + (w - s) * lm)
    down = l1[1 : N + 1] * l2[h + 1 : N + h + 1] * np.exp(w * lm + (w - s) * lmh)
    return up - down


def direct_dhat(
    f1: CuspForm,
    f2: CuspForm,
    h: int,
    N: int = 10**5,
    scheme: str = "abel",
    ctx: PrecisionContext | None = None,
) -> ShiftedValue:
    """D̂(h) = Σ_{m≥1} [a₁(m+h)a₂(m)m^{-(k-1)} - a₁(m)a₂(m+h)(m+h)^{-(k-1)}], m ≤ N.

    The two series are paired at equal m (the n = m and n = m + h terms of the
    defining difference).  ``abel`` sums at s = k-1+ε and extrapolates ε → 0;
    ``cesaro`` averages partial sums over m ∈ [N/2, N].  Both are always
    computed; the error estimate is the spread between them plus the
    half-range of the partial sums over [N/2, N].
    """
    if h < 1:
        raise ValueError("h must be positive")
    if N < 10 * h:
        raise ValueError("need N >= 10h")
    if scheme not in ("abel", "cesaro"):
        raise ValueError(f"unknown scheme {scheme!r}")
    ctx = ctx or PrecisionContext(128, 1e-12)
    k = f1.weight
    w = (k - 1) / 2
    l1 = _normalized(f1, N + h)
    l2 = l1 if f2 is f1 else _normalized(f2, N + h)
    params = {"N": N, "scheme": scheme, "epsilons": list(ABEL_EPSILONS)}
    terms = _paired_terms(l1, l2, h, N, w, k - 1)
    if not np.any(terms):
        return ShiftedValue(h, mp.mpf(0), "direct", 1e-300, params)
    partial = np.cumsum(terms)
    tail = partial[N // 2 - 1 :]
    cesaro = float(tail.mean())
    half_range = float(tail.max() - tail.min()) / 2
    samples = [(eps, math.fsum(_paired_terms(l1, l2, h, N, w, k - 1 + eps))) for eps in ABEL_EPSILONS]
    abel = richardson_limit(samples, ctx)
    spread = abs(float(abel.value) - cesaro)
    value = float(abel.value) if scheme == "abel" else cesaro
    if spread > 0.05 * abs(value):
        raise ConvergenceError(f"Abel ({float(abel.value):.6g}) and Cesaro ({cesaro:.6g}) disagree beyond 5%")
    error = spread + half_range + float(abel.error) + 1e-15 * abs(value)
    params.update(abel=float(abel.value), cesaro=cesaro)
    with ctx.workprec():
        return ShiftedValue(h, mp.mpf(value), "direct", error, params)


# --- mock route ---------------------------------------------------------------------


def _mock_context(hmf: HarmonicMaassForm, h: int) -> PrecisionContext:
    # |b(n)| ≤ e^{4π√n}; the result is O(h^6), so digits cancel
    return hmf.ctx.for_magnitude(4 * math.pi * math.sqrt(h + 1) / math.log(10))


def mock_dhat_many(hmf: HarmonicMaassForm, f2: CuspForm, hs) -> list[ShiftedValue]:
    """mock_dhat for several h sharing one coefficient table."""
    hs = list(hs)
    if not hs or min(hs) < 1:
        raise ValueError("h values must be positive")
    H = max(hs)
    ctx = _mock_context(hmf, H)
    k = hmf.k
    mu = hmf.generating_scale()
    a2 = _coeffs(f2, H + 1)
    b = hmf.raw_coeffs(H - 1, ctx)
    sig = divisor_sigma_table(1, H)
    out = []
    with ctx.workprec():
        mu = mp.mpf(mu.real) if mp.im(mu) == 0 else mu
        fact = mp.factorial(k - 1)
        constant = mp.mpf(a2[1])  # [q⁰](Q̂⁺f₂) from q⁻¹·a₂(1)q
        for h in hs:
            coeff = mp.mpf(a2[h + 1]) + mp.fsum(b[n] * a2[h - n] for n in range(h))
            value = (-mu * coeff + mu * constant * (-24 * sig[h])) / fact
            scale = float(abs(mu) / fact) * (
                hmf.atol * sum(abs(a2[h - n]) for n in range(h))
                + float(mp.eps) * float(mp.fsum(abs(b[n] * a2[h - n]) for n in range(h)))
            )
            err = max(scale, float(mp.eps) * float(abs(value)), 1e-300)
            params = {"precision": ctx.working_precision, "atol": hmf.atol}
            out.append(ShiftedValue(h, value, "mock", err, params))
    return out


def mock_dhat(hmf: HarmonicMaassForm, f2: CuspForm, h: int) -> ShiftedValue:
    """D̂(h) = -[qʰ](M⁺f₂)/(k-1)! + [q⁰](M⁺f₂)/(k-1)!·[qʰ]E₂.

    M⁺ = μ·Q̂⁺ is the holomorphic part at the generating-function scale
    μ = -(k-1)(4π)^{k-1}λ.  The E₂ multiple removes the constant term.
    """
    return mock_dhat_many(hmf, f2, [h])[0]


def mock_cancellation_ratio(hmf: HarmonicMaassForm, f2: CuspForm, h: int) -> mp.mpf:
    """max_n |μ b(n) a₂(h-n)|/(k-1)! divided by |D̂(h)|: the cancellation in the mock route."""
    ctx = _mock_context(hmf, h)
    val = mock_dhat(hmf, f2, h).value
    b = hmf.raw_coeffs(h - 1, ctx)
    a2 = _coeffs(f2, h + 1)
    with ctx.workprec():
        mu = abs(hmf.generating_scale())
        big = max(abs(b[n] * a2[h - n]) for n in range(h))
        return mu * big / mp.factorial(hmf.k - 1) / abs(val)


def generating_constant_term(hmf: HarmonicMaassForm, f2: CuspForm) -> mp.mpf:
    """q⁰-coefficient of -M⁺f₂/(k-1)! + (c⁺(-1)/(k-1)!)·a₂(1)·E₂, which must vanish."""
    a2 = _coeffs(f2, 1)
    with hmf.ctx.workprec():
        mu = hmf.generating_scale()
        return (-mu * a2[1] + mu * a2[1] * 1) / mp.factorial(hmf.k - 1)


def generating_function(hmf: HarmonicMaassForm, f2: CuspForm, H: int) -> QSeries:
    """Σ_{h=1}^{H} D̂(h) qʰ from the mock route (coefficient of q⁰ is 0)."""
    if H < 1:
        raise ValueError("H must be positive")
    vals = mock_dhat_many(hmf, f2, range(1, H + 1))
    return QSeries([mp.mpf(0)] + [v.value for v in vals], 0, H)


# --- projection route -------------------------------------------------------------


def _head_integrand(hmf: HarmonicMaassForm, a2: list[int], h: int, M: int, s: float):
    """y ↦ Σ_{m≤M} c⁻_μ(m)·Γ(k-1, 4πmy)·a₂(h+m)·e^{-4πhy}·y^{-s}, with c⁻_μ = (μ/λ)·c⁻.

    The m-sum is evaluated in double precision; the quadrature runs on top.
    """
    k = hmf.k
    with hmf.ctx.workprec():
        scale = -(k - 1) * (4 * mp.pi) ** (k - 1)
        wgt = np.array([float(scale * hmf.c_minus(m) * a2[h + m]) for m in range(1, M + 1)])
    four_pi_m = 4 * math.pi * np.arange(1, M + 1, dtype=float)
    inv_fact = np.array([1 / math.factorial(j) for j in range(k - 1)])
    fact = math.factorial(k - 2)

    def integrand(y):
        yf = float(y)
        x = four_pi_m * yf
        poly = np.polynomial.polynomial.polyval(x, inv_fact)
        total = float(np.dot(wgt, np.exp(-x) * poly))
        return mp.mpf(fact * total * math.exp(-4 * math.pi * h * yf)) * mp.power(y, -s)

    return integrand


def _smoothed_tail(f1: CuspForm, f2: CuspForm, h: int, M: int, X: float, b: float) -> float:
    """Σ_{m>M} (k-2)!/(k-1)!·c⁻_μ(m)a₂(h+m)(1-(m/(m+h))^{k-1})·w(m/X), w = ½erfc(b·ln(m/X)/2).

    Each term is the closed-form s → 0 limit of its projection integral.
    """
    k = f1.weight
    wexp = (k - 1) / 2
    # w(m/X) < 1e-18 beyond this point
    m_top = int(X * math.exp(2 * 6.2 / b)) + 1
    l1 = _normalized(f1, m_top + h)
    l2 = l1 if f2 is f1 else _normalized(f2, m_top + h)
    m = np.arange(M + 1, m_top + 1, dtype=float)
    r = np.log1p(h / m)
    # (k-1)·a₁(m)a₂(m+h)/m^{k-1}·(1 - (m/(m+h))^{k-1})/(k-1) in normalized form
    terms = l1[M + 1 : m_top + 1] * l2[M + 1 + h : m_top + 1 + h] * 2 * np.sinh(wexp * r)
    weight = 0.5 * special.erfc(b * np.log(m / X) / 2)
    return math.fsum(terms * weight)


def projection_dhat(
    hmf: HarmonicMaassForm,
    f2: CuspForm,
    h: int,
    m_head: int | None = None,
    X: float = 30000.0,
    b: float = 4.0,
    ctx: PrecisionContext | None = None,
) -> ShiftedValue:
    """D̂(h) from the h-th coefficient of the regularized holomorphic projection of M⁻·f₂ (weight 2).

    c(h) = lim_{s→0} 4πh·∫₀^∞ a(h,y)e^{-4πhy}y^{-s} dy with
    a(h,y) = Σ_m c⁻_μ(m)Γ(k-1, 4πmy)a₂(h+m).  The m ≤ max(200, 20h) part is
    integrated numerically at several s and extrapolated; the remaining
    m-sum, which converges only conditionally, uses the closed-form s → 0
    integrals with a smooth logarithmic cutoff at m ≈ X.  The error estimate
    combines the extrapolation error with the change of the tail under X → X/2.
    """
    if h < 1:
        raise ValueError("h must be positive")
    ctx = ctx or PrecisionContext(64, 1e-12)
    k = hmf.k
    M = m_head if m_head is not None else max(200, 20 * h)
    a2 = _coeffs(f2, M + h)
    samples = []
    for s in PROJECTION_S:
        g = _head_integrand(hmf, a2, h, M, s)
        val = integrate_semiline(g, -s, ctx)
        with ctx.workprec():
            samples.append((s, 4 * mp.pi * h * val / mp.factorial(k - 1)))
    head = richardson_limit(samples, ctx)
    tail = _smoothed_tail(hmf.shadow, f2, h, M, X, b)
    tail_half = _smoothed_tail(hmf.shadow, f2, h, M, X / 2, b)
    with ctx.workprec():
        value = head.value + tail
        err = float(head.error) + abs(tail - tail_half) + 1e-15 * float(abs(value))
    params = {"m_head": M, "X": X, "b": b, "s_samples": list(PROJECTION_S)}
    return ShiftedValue(h, value, "projection", err, params)
