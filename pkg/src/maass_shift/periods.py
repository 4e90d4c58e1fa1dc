"""Periods, critical L-values, additive twists and period polynomials of cusp forms."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable

import mpmath as mp

from .modular import CuspForm
from .numerics import DEFAULT_CONTEXT, PrecisionContext, PrecisionError

__all__ = [
    "GL2Matrix",
    "S",
    "T",
    "U",
    "IDENTITY",
    "PeriodData",
    "period",
    "l_value",
    "additive_twist",
    "twisted_l_values",
    "period_polynomial",
    "rho_polynomial",
    "eval_polynomial",
    "twisted_period_polynomial",
    "reduce_to_fundamental_domain",
]


@dataclass(frozen=True)
class GL2Matrix:
    """Integer matrix (a b; c d) of determinant one acting by Möbius maps."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"determinant of ({self.a},{self.b};{self.c},{self.d}) is not 1")

    def __matmul__(self, other: "GL2Matrix") -> "GL2Matrix":
        return GL2Matrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def __neg__(self) -> "GL2Matrix":
        return GL2Matrix(-self.a, -self.b, -self.c, -self.d)

    def inverse(self) -> "GL2Matrix":
        return GL2Matrix(self.d, -self.b, -self.c, self.a)

    def act(self, z):
        z = mp.mpmathify(z)
        return (self.a * z + self.b) / (self.c * z + self.d)

    def j(self, z):
        """Automorphy factor cz + d."""
        return self.c * mp.mpmathify(z) + self.d

    def slash(self, func: Callable, weight) -> Callable:
        """z ↦ (cz+d)^(-weight)·func(γz)."""
        return lambda z: self.j(z) ** (-weight) * func(self.act(z))

    def with_positive_c(self) -> "GL2Matrix":
        return -self if self.c < 0 or (self.c == 0 and self.d < 0) else self


S = GL2Matrix(0, -1, 1, 0)
T = GL2Matrix(1, 1, 0, 1)
U = T @ S
IDENTITY = GL2Matrix(1, 0, 0, 1)


def reduce_to_fundamental_domain(z, max_steps: int = 10**4) -> tuple[mp.mpc, GL2Matrix]:
    """Return (w, δ) with w = δz in {|w| ≥ 1, -1/2 ≤ Re w < 1/2}."""
    w = mp.mpc(z)
    if not w.imag > 0:
        raise ValueError("point must lie in the upper half plane")
    delta = IDENTITY
    for _ in range(max_steps):
        shift = -int(mp.floor(w.real + mp.mpf(1) / 2))
        if shift:
            Tn = GL2Matrix(1, shift, 0, 1)
            w = Tn.act(w)
            delta = Tn @ delta
        if abs(w) < 1:
            w = S.act(w)
            delta = S @ delta
        else:
            return w, delta
    raise ArithmeticError("reduction to the fundamental domain did not terminate")


# --- twisted L-values by the two-piece method -------------------------------


def _completion(d: int, c: int) -> int:
    """Minimal |a| with a·d ≡ 1 (mod c)."""
    if c == 1:
        return 0
    a = pow(d, -1, c)
    return a - c if 2 * a > c else a


def _normalize(d: int, c: int) -> tuple[int, int]:
    if c == 0:
        raise ValueError("additive twist needs c != 0")
    if math.gcd(d, c) != 1:
        raise ValueError(f"gcd({d}, {c}) != 1")
    if c < 0:
        d, c = -d, -c
    return d % c, c


_twist_lock = threading.Lock()
_twist_cache: dict = {}


def _piece(f: CuspForm, c: int, char: Callable[[int], mp.mpc], weight: int, ctx: PrecisionContext) -> list:
    """[Σ_m a(m)·char(m)·Γ(s, 2πm/c)/(2πm)^s for s = 1..weight-1], truncated by a tail bound.

    Uses Γ(s,x) = (s-1)! e^{-x} Σ_{j<s} x^j/j! for all s at once, and
    |a(m)| ≤ 2√m·m^{(k-1)/2} with Γ(s,x)/x^s ≤ 2e^{-x}/x for x ≥ 2s.
    """
    tol = ctx.tol
    two_pi = 2 * mp.pi
    smax = weight - 1
    fact = [mp.factorial(j) for j in range(smax + 1)]
    sums = [mp.mpc(0)] * (smax + 1)
    ratio = math.exp(-2 * math.pi / c)
    for m in range(1, f.N + 1):
        am = f.a(m)
        if am:
            x = two_pi * m / c
            ex = mp.exp(-x)
            w = am * char(m)
            # partial exponential sums e_s = Σ_{j<s} x^j/j!
            xp = mp.mpf(1)
            partial = mp.mpf(0)
            inv_2pim = 1 / (two_pi * m)
            pw = mp.mpf(1)
            for s in range(1, smax + 1):
                partial += xp / fact[s - 1]
                xp *= x
                pw *= inv_2pim
                sums[s] += w * fact[s - 1] * ex * partial * pw
        xm = 2 * math.pi * (m + 1) / c
        if xm >= 2 * weight:
            # Σ_{j>m} 4 j^{k/2} e^{-x_j}/x_j as a geometric series
            r = ratio * ((m + 2) / (m + 1)) ** (weight / 2)
            if r < 1:
                log_tail = math.log(4) + (weight / 2) * math.log(m + 1) - xm - math.log(xm) - math.log1p(-r)
                floor = float(tol) * max(float(abs(v)) for v in sums[1:])
                if all(
                    log_tail - s * math.log(c) < math.log(max(float(tol) * float(abs(sums[s])), floor, 1e-300))
                    for s in range(1, smax + 1)
                ):
                    return sums
    raise PrecisionError(f"expansion through q^{f.N} too short for twists with c={c}")


def twisted_l_values(f: CuspForm, d: int, c: int, ctx: PrecisionContext = DEFAULT_CONTEXT) -> list:
    """[L(f, e^{-2πid/c}, s) for s = 0..k-1] (entry 0 unused, set to 0)."""
    d, c = _normalize(d, c)
    key = (f.fourier, f.N, f.weight, d, c, ctx.working_precision, ctx.target_relative_tolerance)
    with _twist_lock:
        hit = _twist_cache.get(key)
    if hit is not None:
        return hit
    k = f.weight
    a = _completion(d, c)
    with ctx.workprec():
        roots = [mp.expjpi(mp.mpf(2 * j) / c) for j in range(c)]
        upper = _piece(f, c, lambda m: roots[(-m * d) % c], k, ctx)
        lower = _piece(f, c, lambda m: roots[(m * a) % c], k, ctx)
        two_pi = 2 * mp.pi
        front = mp.mpc(0, c) ** (-k)
        out = [mp.mpc(0)]
        for s in range(1, k):
            val = upper[s] + front * mp.mpf(c) ** (2 * (k - s)) * lower[k - s]
            out.append(two_pi**s / mp.factorial(s - 1) * val)
    with _twist_lock:
        _twist_cache.setdefault(key, out)
    return out


def additive_twist(f: CuspForm, d: int, c: int, s: int, ctx: PrecisionContext = DEFAULT_CONTEXT) -> mp.mpc:
    """L(f, e^{-2πid/c}, s) at an integer 1 ≤ s ≤ k-1, by analytic continuation."""
    if not 1 <= s <= f.weight - 1:
        raise ValueError(f"s must lie in 1..{f.weight - 1}")
    return twisted_l_values(f, d, c, ctx)[s]


def l_value(f: CuspForm, s: int, ctx: PrecisionContext = DEFAULT_CONTEXT) -> mp.mpc:
    """Critical value L(f, s) for 1 ≤ s ≤ k-1."""
    return additive_twist(f, 0, 1, s, ctx)


def period(f: CuspForm, n: int, ctx: PrecisionContext = DEFAULT_CONTEXT) -> mp.mpc:
    """r_n(f) = ∫₀^∞ f(it) tⁿ dt = n!/(2π)^{n+1}·L(f, n+1)."""
    if not 0 <= n <= f.weight - 2:
        raise ValueError(f"n must lie in 0..{f.weight - 2}")
    L = l_value(f, n + 1, ctx)
    with ctx.workprec():
        return mp.factorial(n) / (2 * mp.pi) ** (n + 1) * L


# --- period polynomials -----------------------------------------------------


@dataclass(frozen=True)
class PeriodData:
    form: CuspForm
    periods: tuple
    critical_l_values: tuple
    even_polynomial: tuple
    odd_polynomial: tuple

    def r(self, z) -> mp.mpc:
        """r(f; z) = r⁺(f, z) + i·r⁻(f, z)."""
        return eval_polynomial(self.even_polynomial, z) + 1j * eval_polynomial(self.odd_polynomial, z)


def eval_polynomial(coeffs, z) -> mp.mpc:
    """Σ coeffs[j]·z^j (ascending order) by Horner."""
    z = mp.mpmathify(z)
    acc = mp.mpc(0)
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def period_polynomial(f: CuspForm, ctx: PrecisionContext = DEFAULT_CONTEXT) -> PeriodData:
    """Periods r_0..r_{k-2}, L(f,1..k-1) and the ascending coefficient lists of r⁺ and r⁻."""
    k = f.weight
    w = k - 2
    with ctx.workprec():
        Ls = tuple(l_value(f, s, ctx) for s in range(1, k))
        rs = tuple(mp.factorial(n) / (2 * mp.pi) ** (n + 1) * Ls[n] for n in range(w + 1))
        even = [mp.mpc(0)] * (w + 1)
        odd = [mp.mpc(0)] * (w + 1)
        for n in range(w + 1):
            coeff = mp.binomial(w, n) * rs[n]
            if n % 2 == 0:
                even[w - n] = (-1) ** (n // 2) * coeff
            else:
                odd[w - n] = (-1) ** ((n - 1) // 2) * coeff
    return PeriodData(f, rs, Ls, tuple(even), tuple(odd))


def rho_polynomial(data: PeriodData, ctx: PrecisionContext = DEFAULT_CONTEXT) -> tuple:
    """Ascending coefficients of ρ(f; z) = ∫₀^{i∞} f(τ)(z-τ)^{k-2} dτ.

    Substituting τ = it gives ρ(z) = i·Σ C(k-2,n)(-i)ⁿ r_n z^{k-2-n}.
    """
    w = data.form.weight - 2
    out = [mp.mpc(0)] * (w + 1)
    with ctx.workprec():
        for n, rn in enumerate(data.periods):
            out[w - n] = 1j * mp.binomial(w, n) * mp.mpc(0, -1) ** n * rn
    return tuple(out)


def twisted_period_polynomial(
    f: CuspForm, gamma: GL2Matrix, z, ctx: PrecisionContext = DEFAULT_CONTEXT
) -> mp.mpc:
    """Σ_n conj(L(f, e^{-2πid/c}, n+1))/(k-2-n)!·(-2πi)^{k-2-n}·((cz+d)/c)^{k-2-n}.

    The predicted period function of a mock modular form with shadow f;
    γ and -γ act identically, so c is made positive first.
    """
    g = gamma.with_positive_c()
    if g.c == 0:
        raise ValueError("twisted period polynomial needs c != 0")
    k = f.weight
    Ls = twisted_l_values(f, g.d, g.c, ctx)
    with ctx.workprec():
        x = (g.c * mp.mpmathify(z) + g.d) / g.c
        step = mp.mpc(0, -2 * mp.pi) * x
        total = mp.mpc(0)
        for n in range(k - 1):
            e = k - 2 - n
            total += mp.conj(Ls[n + 1]) / mp.factorial(e) * step**e
        return total
