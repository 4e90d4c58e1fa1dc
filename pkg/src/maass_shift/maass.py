"""The weight 2-k harmonic Maass form with a simple pole at the cusp and shadow a cusp form.

The holomorphic part is built from the Maass–Poincaré series
Q̂⁺(τ) = q⁻¹ + Σ_{n≥0} b(n) qⁿ, whose coefficients are Kloosterman–Bessel
sums.  The scalar λ (``calibration_lambda``) rescales Q̂⁺ so that the shadow
is exactly the given cusp form; it is fixed from the period function, which
depends only on the shadow.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import mpmath as mp
import numpy as np
from scipy import special

from .modular import CuspForm, delta_expansion, tau_values
from .numerics import (
    DEFAULT_CONTEXT,
    PrecisionContext,
    PrecisionError,
    bessel_i,
)
from .periods import (
    S,
    GL2Matrix,
    reduce_to_fundamental_domain,
    twisted_period_polynomial,
)
from .qseries import QSeries

__all__ = [
    "HarmonicMaassForm",
    "kloosterman",
    "kloosterman_counts",
    "raw_poincare_coeff",
    "poincare_tail_bound",
    "calibrate",
    "m_minus_eval",
    "period_function",
    "lemma_bound_scan",
    "delta_maass_form",
    "DEFAULT_CALIBRATION_POINTS",
]

DEFAULT_CALIBRATION_POINTS = ((S, 1j), (S, 2j), (GL2Matrix(1, 0, 1, 1), 0.5 + 2j))


# --- Kloosterman sums ---------------------------------------------------------

_kl_lock = threading.Lock()
_kl_counts: dict = {}


def kloosterman_counts(m: int, n: int, c: int) -> tuple[int, ...]:
    """Multiplicities of the residues md + n·d̄ (mod c) over d ∈ (ℤ/c)^×.

    K(m, n; c) = Σ_j counts[j]·e^{2πij/c}; the counts are exact integers.
    """
    if c < 1:
        raise ValueError("modulus c must be positive")
    key = (m % c, n % c, c)
    with _kl_lock:
        hit = _kl_counts.get(key)
    if hit is not None:
        return hit
    counts = [0] * c
    if c == 1:
        counts[0] = 1
    else:
        m0, n0 = key[0], key[1]
        for d in range(1, c):
            if math.gcd(d, c) == 1:
                counts[(m0 * d + n0 * pow(d, -1, c)) % c] += 1
    out = tuple(counts)
    with _kl_lock:
        _kl_counts.setdefault(key, out)
    return out


def kloosterman(m: int, n: int, c: int, ctx: PrecisionContext = DEFAULT_CONTEXT) -> mp.mpc:
    """K(m, n; c) = Σ_{d mod c, (d,c)=1} e^{2πi(md + n·d̄)/c}."""
    counts = kloosterman_counts(m, n, c)
    with ctx.workprec():
        total = mp.mpc(0)
        for j, cnt in enumerate(counts):
            if cnt:
                total += cnt * mp.expjpi(mp.mpf(2 * j) / c)
        return total


def _kloosterman_real(n: int, c: int, cos_table: Sequence) -> mp.mpf:
    """Re K(-1, n; c), which is all of it since d ↦ -d̄ pairs conjugate terms."""
    counts = kloosterman_counts(-1, n, c)
    return mp.fsum(cnt * cos_table[j] for j, cnt in enumerate(counts) if cnt)


class _FloatKloosterman:
    """Double-precision K(-1, n; c) for many n at once, used for tiny c-terms."""

    def __init__(self):
        self._units: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._lock = threading.Lock()

    def units(self, c: int) -> tuple[np.ndarray, np.ndarray]:
        with self._lock:
            hit = self._units.get(c)
        if hit is None:
            d = np.array([x for x in range(c) if math.gcd(x, c) == 1], dtype=np.int64)
            dbar = np.array([pow(int(x), -1, c) for x in d], dtype=np.int64)
            hit = (d, dbar)
            with self._lock:
                self._units.setdefault(c, hit)
        return hit

    def values(self, ns: np.ndarray, c: int) -> np.ndarray:
        if c == 1:
            return np.ones(len(ns))
        d, dbar = self.units(c)
        phase = (np.outer(ns % c, dbar) - d[None, :]) % c
        return np.cos(2 * np.pi * phase / c).sum(axis=1)


_float_kl = _FloatKloosterman()


# --- Poincaré coefficients ------------------------------------------------------


def _log_term_bound(n: int, c: int, k: int) -> float:
    """log of 2π n^{(1-k)/2}·(2π√n/c)^ν/ν!·e^{B/c²}, the trivial-bound size of the c-th term."""
    nu = k - 1
    B = 4 * math.pi**2 * n / (nu + 1)
    return (
        math.log(2 * math.pi)
        + 0.5 * (1 - k) * math.log(n)
        + nu * math.log(2 * math.pi * math.sqrt(n) / c)
        - math.lgamma(nu + 1)
        + B / c**2
    )


def poincare_tail_bound(n: int, C: int, k: int = 12) -> float:
    """Rigorous bound on Σ_{c>C} |K(-1,n;c)/c·I_{k-1}(4π√n/c)|·2π n^{(1-k)/2}.

    Uses |K| ≤ c and I_ν(x) ≤ (x/2)^ν/ν!·e^{x²/(4(ν+1))}.
    """
    nu = k - 1
    A = (2 * math.pi * math.sqrt(n)) ** nu / math.factorial(nu)
    B = 4 * math.pi**2 * n / (nu + 1)
    c1 = C + 1
    log_val = (
        math.log(2 * math.pi)
        + 0.5 * (1 - k) * math.log(n)
        + math.log(A)
        + B / c1**2
        + math.log(c1 ** (-nu) + c1 ** (1 - nu) / (nu - 1))
    )
    return math.exp(log_val) if log_val < 700 else math.inf


def _c_cutoff(n: int, k: int, atol: float, c_max: int) -> int:
    C = 1
    while poincare_tail_bound(n, C, k) > atol:
        C = C + 1 if C < 64 else int(C * 1.25)
        if C > c_max:
            raise PrecisionError(f"Kloosterman c-sum for n={n} needs c > c_max={c_max} for tolerance {atol:g}")
    return C


def raw_poincare_coeff(
    n: int,
    k: int = 12,
    atol: float = 1e-26,
    c_max: int = 4000,
    ctx: PrecisionContext = DEFAULT_CONTEXT,
) -> mp.mpf:
    """Coefficient b(n) of qⁿ in Q̂⁺ = q⁻¹ + Σ_{n≥0} b(n)qⁿ, to absolute accuracy ``atol``.

    b(n) = -2π·i^k·n^{(1-k)/2}·Σ_{c≥1} K(-1,n;c)/c·I_{k-1}(4π√n/c) for n ≥ 1 and
    b(0) = -(2πi)^k/((k-1)!·ζ(k)) since K(-1,0;c) = μ(c).  The c-sum is cut off
    by :func:`poincare_tail_bound`; terms whose size bound is below ``atol``
    times 1e13 are accumulated in double precision.
    """
    return _raw_block([n], k, atol, c_max, ctx)[0]


def _raw_block(ns: Sequence[int], k: int, atol: float, c_max: int, ctx: PrecisionContext) -> list:
    if k % 4 not in (0, 2) or k < 4:
        raise ValueError("weight k must be even and at least 4")
    ik = 1 if k % 4 == 0 else -1
    out: dict[int, mp.mpf] = {}
    with ctx.workprec():
        two_pi = 2 * mp.pi
        cos_tables: dict[int, list] = {}
        pending: dict[int, tuple[int, int]] = {}
        for n in ns:
            if n < 0:
                raise ValueError("raw_poincare_coeff needs n >= 0")
            if n == 0:
                out[0] = -ik * two_pi**k / (mp.factorial(k - 1) * mp.zeta(k))
                continue
            C = _c_cutoff(n, k, atol, c_max)
            # largest c whose term is big enough to need full precision
            c_hi = 1
            while c_hi < C and _log_term_bound(n, c_hi + 1, k) > math.log(atol) + 13 * math.log(10):
                c_hi += 1
            x0 = 4 * mp.pi * mp.sqrt(n)
            total = mp.mpf(0)
            for c in range(1, c_hi + 1):
                if c not in cos_tables:
                    cos_tables[c] = [mp.cos(two_pi * j / c) for j in range(c)]
                K = _kloosterman_real(n, c, cos_tables[c])
                if not K:
                    continue
                log_rel = math.log(atol / 10) - _log_term_bound(n, c, k)
                rel = math.exp(max(log_rel, -690.0))
                total += K / c * bessel_i(k - 1, x0 / c, ctx.with_tolerance(rel))
            out[n] = total
            pending[n] = (c_hi, C)
        # double-precision tail c_hi < c ≤ C, vectorised over n for each c
        if pending:
            c_top = max(C for _, C in pending.values())
            float_acc = {n: 0.0 for n in pending}
            arr_n = np.array(sorted(pending), dtype=np.int64)
            lo = np.array([pending[n][0] for n in arr_n])
            hi = np.array([pending[n][1] for n in arr_n])
            sqrt_n = np.sqrt(arr_n.astype(float))
            for c in range(2, c_top + 1):
                mask = (lo < c) & (c <= hi)
                if not mask.any():
                    continue
                sel = arr_n[mask]
                K = _float_kl.values(sel, c)
                term = K / c * special.iv(k - 1, 4 * np.pi * sqrt_n[mask] / c)
                for n, t in zip(sel.tolist(), term.tolist()):
                    float_acc[n] += t
            for n in pending:
                pref = -ik * two_pi * mp.power(n, mp.mpf(1 - k) / 2)
                out[n] = pref * (out[n] + float_acc[n])
    return [out[n] for n in ns]


# --- the harmonic Maass form ------------------------------------------------------


@dataclass
class HarmonicMaassForm:
    """Weight 2-k harmonic Maass form with principal part q⁻¹ (before scaling) and given shadow.

    ``calibration_lambda`` is None until :func:`calibrate` runs; afterwards the
    holomorphic part is λ·Q̂⁺ and ξ_{2-k} of the full form is the shadow.
    Poincaré coefficients are cached write-once per (n, precision in bits).
    """

    shadow: CuspForm
    ctx: PrecisionContext = DEFAULT_CONTEXT
    atol: float = 1e-26
    c_max: int = 4000
    calibration_lambda: mp.mpc | None = None
    principal_part: QSeries = field(default_factory=lambda: QSeries.monomial(-1))
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def weight(self) -> int:
        return 2 - self.shadow.weight

    @property
    def k(self) -> int:
        return self.shadow.weight

    # coefficients -----------------------------------------------------------

    def raw_coeffs(self, N: int, ctx: PrecisionContext | None = None) -> list:
        """[b(0), ..., b(N)] computed at exactly the precision of ``ctx`` (cached per precision)."""
        ctx = ctx or self.ctx
        bits = ctx.working_precision
        with self._lock:
            missing = [n for n in range(N + 1) if (n, bits) not in self._cache]
        if missing:
            vals = _raw_block(missing, self.k, self.atol, self.c_max, ctx)
            with self._lock:
                for n, v in zip(missing, vals):
                    self._cache.setdefault((n, bits), v)
        with self._lock:
            return [self._cache[(n, bits)] for n in range(N + 1)]

    def raw_coeff(self, n: int, ctx: PrecisionContext | None = None) -> mp.mpf:
        if n == -1:
            return mp.mpf(1)
        if n < -1:
            return mp.mpf(0)
        return self.raw_coeffs(n, ctx)[n]

    def preload(self, entries: Iterable[tuple[int, int, mp.mpf]]) -> None:
        """Insert (n, bits, value) triples, e.g. from a disk cache."""
        with self._lock:
            for n, bits, v in entries:
                self._cache.setdefault((n, bits), v)

    def cached_entries(self) -> list[tuple[int, int, mp.mpf]]:
        with self._lock:
            return [(n, bits, v) for (n, bits), v in sorted(self._cache.items())]

    def _require_lambda(self) -> mp.mpc:
        if self.calibration_lambda is None:
            raise RuntimeError("harmonic Maass form is not calibrated; call calibrate() first")
        return self.calibration_lambda

    def holo_coeff(self, n: int, ctx: PrecisionContext | None = None) -> mp.mpc:
        """c⁺(n) = λ·b(n) (c⁺(-1) = λ)."""
        lam = self._require_lambda()
        with (ctx or self.ctx).workprec():
            return lam * self.raw_coeff(n, ctx)

    def c_minus(self, n: int) -> mp.mpf:
        """c⁻(n) = -a(n)/((4π)^{k-1} n^{k-1}), the coefficients forced by the shadow."""
        if n < 1:
            return mp.mpf(0)
        k = self.k
        a = tau_values(n)[n] if self.shadow.name == "delta" else self.shadow.a(n)
        with self.ctx.workprec():
            return -mp.mpf(a) / ((4 * mp.pi) ** (k - 1) * mp.mpf(n) ** (k - 1))

    def shadow_from_c_minus(self, N: int) -> list[int]:
        """-(4π)^{k-1}·c⁻(n)·n^{k-1} rounded, n = 1..N; reproduces the shadow."""
        k = self.k
        with self.ctx.workprec():
            return [int(mp.nint(-(4 * mp.pi) ** (k - 1) * self.c_minus(n) * mp.mpf(n) ** (k - 1))) for n in range(1, N + 1)]

    # evaluation -------------------------------------------------------------

    def raw_holomorphic(self, tau, ctx: PrecisionContext | None = None, n_cap: int = 2000) -> mp.mpc:
        """Q̂⁺(τ) = q⁻¹ + Σ b(n)qⁿ by direct summation."""
        ctx = ctx or self.ctx
        with ctx.workprec():
            tau = mp.mpc(tau)
            y = float(tau.imag)
            if not y > 0:
                raise ValueError("need Im(tau) > 0")
            # terms grow like e^{4π√n - 2πny}; they decrease once n > 1/y²
            N = _holomorphic_length(y, float(ctx.target_relative_tolerance))
            if N > n_cap:
                raise PrecisionError(f"Im(tau)={y:.3g} needs {N} > {n_cap} Poincare coefficients")
            b = self.raw_coeffs(N, ctx)
            q = mp.expjpi(2 * tau)
            total = 1 / q
            qn = mp.mpf(1)
            for n in range(N + 1):
                total += b[n] * qn
                qn *= q
            return total

    def holomorphic(self, tau, ctx: PrecisionContext | None = None) -> mp.mpc:
        """M⁺(τ) = λ·Q̂⁺(τ) for Im τ large enough for direct summation."""
        lam = self._require_lambda()
        with (ctx or self.ctx).workprec():
            return lam * self.raw_holomorphic(tau, ctx)

    def nonholomorphic(self, tau, N: int | None = None, ctx: PrecisionContext | None = None) -> mp.mpc:
        return m_minus_eval(self, tau, N, ctx)

    def full(self, tau, ctx: PrecisionContext | None = None) -> mp.mpc:
        """M(τ) = M⁺(τ) + M⁻(τ), evaluated in the fundamental domain and transported by modularity
        when Im τ is too small for the q-series."""
        ctx = ctx or self.ctx
        with ctx.workprec():
            tau = mp.mpc(tau)
            if tau.imag >= _DIRECT_MIN_Y:
                return self.holomorphic(tau, ctx) + m_minus_eval(self, tau, None, ctx)
            w, delta = reduce_to_fundamental_domain(tau)
            return delta.j(tau) ** (self.k - 2) * (self.holomorphic(w, ctx) + m_minus_eval(self, w, None, ctx))

    def full_direct(self, tau, ctx: PrecisionContext | None = None) -> mp.mpc:
        """M⁺(τ) + M⁻(τ) by direct summation only (no modular transport)."""
        ctx = ctx or self.ctx
        with ctx.workprec():
            return self.holomorphic(tau, ctx) + m_minus_eval(self, tau, None, ctx)

    def holomorphic_anywhere(self, tau, ctx: PrecisionContext | None = None) -> mp.mpc:
        """M⁺(τ) for any τ: direct when Im τ is large, else M(τ) - M⁻(τ) with M transported."""
        ctx = ctx or self.ctx
        with ctx.workprec():
            tau = mp.mpc(tau)
            if tau.imag >= _DIRECT_MIN_Y:
                return self.holomorphic(tau, ctx)
            return self.full(tau, ctx) - m_minus_eval(self, tau, None, ctx)

    def generating_scale(self) -> mp.mpc:
        """μ = -(k-1)(4π)^{k-1}·λ: the scale at which ξ of the form is -(k-1)(4π)^{k-1} times the shadow,
        the normalization entering the shifted-convolution generating function."""
        lam = self._require_lambda()
        k = self.k
        with self.ctx.workprec():
            return -(k - 1) * (4 * mp.pi) ** (k - 1) * lam


_DIRECT_MIN_Y = 0.5


def _holomorphic_length(y: float, tol: float) -> int:
    target = math.log(tol) - 40
    n = max(int(1 / y**2) + 1, 1)
    while 4 * math.pi * math.sqrt(n) - 2 * math.pi * n * y > target:
        n += 1
    return n


def m_minus_eval(hmf: HarmonicMaassForm, tau, N: int | None = None, ctx: PrecisionContext | None = None) -> mp.mpc:
    """M⁻(τ) = Σ_{n≥1} conj(c⁻(n))·Γ(k-1, 4πny)·q^{-n}.

    With N given, exactly N terms are summed; otherwise terms are added
    until the remaining tail, bounded with |a(n)| ≤ 2√n·n^{(k-1)/2}, is below
    tolerance.
    """
    ctx = ctx or hmf.ctx
    k = hmf.k
    with ctx.workprec():
        tau = mp.mpc(tau)
        y = tau.imag
        if not y > 0:
            raise ValueError("need Im(tau) > 0")
        yf = float(y)
        tol = float(ctx.target_relative_tolerance)
        if N is None:
            # first n past which the bound of every later term falls off geometrically below tol
            x_needed = 2 * (-math.log(tol) + 60 + 10 * math.log(max(1.0, 10 / yf)))
            N_guess = int(x_needed / (4 * math.pi * yf)) + 10
        else:
            N_guess = N
        if hmf.shadow.name == "delta":
            a = tau_values(N_guess)
        else:
            a = hmf.shadow.coefficient_list(min(N_guess, hmf.shadow.N))
            if len(a) <= N_guess and N is None:
                raise PrecisionError(f"shadow expansion too short for M-minus at Im(tau)={yf:.3g}")
        four_pi_y = 4 * mp.pi * y
        norm = (4 * mp.pi) ** (k - 1)
        fact = mp.factorial(k - 2)
        q_inv = mp.expjpi(-2 * tau)
        total = mp.mpc(0)
        qn = mp.mpc(1)
        for n in range(1, N_guess + 1):
            qn *= q_inv
            if not a[n]:
                continue
            x = four_pi_y * n
            # Γ(k-1, x) = (k-2)! e^{-x} Σ_{j<k-1} x^j/j!
            t = mp.mpf(1)
            s = mp.mpf(1)
            for j in range(1, k - 1):
                t = t * x / j
                s += t
            g = fact * mp.exp(-x) * s
            c = -mp.mpf(a[n]) / (norm * mp.mpf(n) ** (k - 1))
            total += c * g * qn
        if N is None:
            xN = 4 * math.pi * yf * N_guess
            log_tail = (
                math.log(2) - (k / 2 - 1) * math.log(N_guess) + math.lgamma(k - 1)
                + (k - 2) * math.log(max(xN, 1.0)) - xN / 2 - (k - 1) * math.log(4 * math.pi)
                - math.log1p(-math.exp(-2 * math.pi * yf))
            )
            scale = max(float(abs(total)), 1e-300)
            if log_tail > math.log(tol * scale) and log_tail > math.log(tol) - 60:
                raise PrecisionError("M-minus tail estimate above tolerance")
        return total


# --- calibration and period functions -------------------------------------------


def _period_prefactor(k: int) -> mp.mpf:
    return (4 * mp.pi) ** (k - 1) / mp.factorial(k - 2)


def calibrate(hmf: HarmonicMaassForm, gamma: GL2Matrix = S, tau=1j, ctx: PrecisionContext | None = None) -> mp.mpc:
    """Solve λ·(4π)^{k-1}/Γ(k-1)·(Q̂⁺ - Q̂⁺|_{2-k}γ)(τ) = twisted period polynomial of the shadow at τ.

    Sets and returns ``hmf.calibration_lambda``.
    """
    ctx = ctx or hmf.ctx
    k = hmf.k
    if gamma.c == 0:
        raise ValueError("calibration needs a matrix with c != 0")
    with ctx.workprec():
        tau = mp.mpc(tau)
        gt = gamma.act(tau)
        diff = hmf.raw_holomorphic(tau, ctx) - gamma.j(tau) ** (k - 2) * hmf.raw_holomorphic(gt, ctx)
        lhs = _period_prefactor(k) * diff
        rhs = twisted_period_polynomial(hmf.shadow, gamma, tau, ctx)
        if abs(lhs) < ctx.tol * max(abs(rhs), 1):
            raise ArithmeticError("calibration is ill-conditioned at this (gamma, tau)")
        lam = rhs / lhs
        # λ is real for real shadow coefficients
        if abs(lam.imag) <= 1e3 * ctx.tol * abs(lam):
            lam = mp.mpc(lam.real, 0)
        hmf.calibration_lambda = lam
        return lam


def period_function(
    hmf: HarmonicMaassForm,
    gamma: GL2Matrix,
    tau,
    route: str = "difference",
    ctx: PrecisionContext | None = None,
) -> mp.mpc:
    """ℙ(M⁺, γ; τ) = (4π)^{k-1}/Γ(k-1)·(M⁺ - M⁺|_{2-k}γ)(τ).

    ``route="difference"`` evaluates the definition from the calibrated
    holomorphic part; ``route="twist"`` evaluates the polynomial in τ built
    from additive twists of the shadow's L-function.
    """
    ctx = ctx or hmf.ctx
    k = hmf.k
    with ctx.workprec():
        tau = mp.mpc(tau)
        if route == "twist":
            if gamma.c == 0:
                return mp.mpc(0)
            return twisted_period_polynomial(hmf.shadow, gamma, tau, ctx)
        if route != "difference":
            raise ValueError(f"unknown route {route!r}")
        diff = hmf.holomorphic_anywhere(tau, ctx) - gamma.j(tau) ** (k - 2) * hmf.holomorphic_anywhere(gamma.act(tau), ctx)
        return _period_prefactor(k) * diff


def lemma_bound_scan(
    hmf: HarmonicMaassForm,
    gamma_set: Sequence[GL2Matrix],
    tau_samples: Sequence,
    route: str = "twist",
    ctx: PrecisionContext | None = None,
) -> mp.mpf:
    """max over samples of |ℙ(M⁺, γ; τ)|/|cτ+d|^{k-2}, with τ in the fundamental domain."""
    ctx = ctx or hmf.ctx
    k = hmf.k
    best = mp.mpf(0)
    with ctx.workprec():
        for g in gamma_set:
            if g.c == 0:
                raise ValueError("lemma_bound_scan needs matrices with c != 0")
            for t in tau_samples:
                t = mp.mpc(t)
                if abs(t) < 1 or abs(t.real) > 0.5:
                    raise ValueError(f"sample {t} is outside the fundamental domain")
                ratio = abs(period_function(hmf, g, t, route, ctx)) / abs(g.j(t)) ** (k - 2)
                if not mp.isfinite(ratio):
                    raise ArithmeticError("non-finite period ratio")
                best = max(best, ratio)
    return best


def delta_maass_form(
    ctx: PrecisionContext = DEFAULT_CONTEXT,
    shadow_length: int = 6000,
    atol: float = 1e-26,
    c_max: int = 4000,
    calibrated: bool = True,
) -> HarmonicMaassForm:
    """The harmonic Maass form of weight -10 with shadow Δ, calibrated at (S, i)."""
    hmf = HarmonicMaassForm(delta_expansion(shadow_length), ctx, atol, c_max)
    if calibrated:
        calibrate(hmf, S, 1j, ctx)
    return hmf
