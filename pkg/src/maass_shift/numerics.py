"""Arbitrary-precision kernel shared by every other module.

All numbers are mpmath ``mpf``/``mpc``.  A :class:`PrecisionContext` carries
the working precision and the tolerance; functions activate it locally with
``ctx.workprec()`` so callers never have to touch the global mpmath state.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, replace
from typing import Callable, Iterator, NamedTuple, Sequence

import gmpy2
import mpmath as mp

__all__ = [
    "PrecisionContext",
    "DEFAULT_CONTEXT",
    "PrecisionError",
    "ConvergenceError",
    "Estimate",
    "gamma",
    "upper_incomplete_gamma",
    "bessel_i",
    "bessel_i_bound",
    "integrate_semiline",
    "richardson_limit",
    "to_mpc",
]


class PrecisionError(ArithmeticError):
    """A truncation or rounding estimate exceeded the requested tolerance."""


class ConvergenceError(ArithmeticError):
    """An iterative scheme (quadrature, extrapolation, summation) stalled."""


class Estimate(NamedTuple):
    value: mp.mpf
    error: mp.mpf


@dataclass(frozen=True)
class PrecisionContext:
    working_precision: int = 512
    target_relative_tolerance: float = 1e-30
    series_truncation_default: int = 1100

    def __post_init__(self):
        if self.working_precision < 64:
            raise ValueError("working_precision must be at least 64 bits")
        if not self.target_relative_tolerance > 0:
            raise ValueError("target_relative_tolerance must be positive")
        if self.series_truncation_default < 1:
            raise ValueError("series_truncation_default must be positive")

    @property
    def dps(self) -> int:
        return mp.libmp.prec_to_dps(self.working_precision)

    @property
    def tol(self) -> mp.mpf:
        with self.workprec():
            return mp.mpf(self.target_relative_tolerance)

    @contextmanager
    def workprec(self) -> Iterator[None]:
        with mp.workprec(self.working_precision):
            yield

    def with_precision(self, bits: int) -> "PrecisionContext":
        return replace(self, working_precision=int(bits))

    def with_tolerance(self, tol: float) -> "PrecisionContext":
        return replace(self, target_relative_tolerance=float(tol))

    def for_magnitude(self, log10_magnitude: float) -> "PrecisionContext":
        """Context able to resolve ``tol`` relative to a result that is
        obtained by cancellation from intermediates of size 10**log10_magnitude.

        Follows the 512 -> 768 bit rule past 1e120 and grows further when the
        cancellation plus tolerance digits would not fit.
        """
        bits = self.working_precision
        if log10_magnitude > 120:
            bits = max(bits, 768)
        digits = log10_magnitude - math.log10(self.target_relative_tolerance) + 20
        needed = int(math.ceil(digits * math.log2(10)))
        if needed > bits:
            bits = 64 * ((needed + 63) // 64)
        return self.with_precision(bits)


DEFAULT_CONTEXT = PrecisionContext()


def to_mpc(z) -> mp.mpc:
    return mp.mpc(z)


def _is_nonpositive_integer(a) -> bool:
    return a <= 0 and a == int(a)


def gamma(a, ctx: PrecisionContext = DEFAULT_CONTEXT) -> mp.mpf:
    """Euler's gamma function at the context precision."""
    with ctx.workprec():
        a = mp.mpf(a)
        if _is_nonpositive_integer(a):
            raise ZeroDivisionError(f"gamma has a pole at {a}")
        return mp.gamma(a)


def upper_incomplete_gamma(a, x, ctx: PrecisionContext = DEFAULT_CONTEXT) -> mp.mpf:
    """Γ(a, x) = ∫_x^∞ t^(a-1) e^(-t) dt for x > 0.

    Positive integer ``a`` uses the finite closed form
    (a-1)! e^(-x) Σ_{j<a} x^j/j!.  Non-positive integer ``a`` runs the
    downward recurrence Γ(a,x) = (Γ(a+1,x) - x^a e^(-x))/a from Γ(0,x) = E₁(x),
    with guard bits for the cancellation at large x.  Anything else goes to
    mpmath.
    """
    with ctx.workprec():
        x = mp.mpf(x)
        if not x > 0:
            raise ValueError("upper_incomplete_gamma requires x > 0")
        a_mp = mp.mpf(a)
        if a_mp == int(a_mp):
            ai = int(a_mp)
            if ai >= 1:
                term = mp.mpf(1)
                total = mp.mpf(1)
                for j in range(1, ai):
                    term = term * x / j
                    total += term
                return mp.factorial(ai - 1) * mp.exp(-x) * total
            guard = 16 + int(-ai * max(1.0, math.log2(float(x) + 1.0)))
            with mp.workprec(ctx.working_precision + guard):
                ex = mp.exp(-x)
                val = mp.e1(x)
                for b in range(-1, ai - 1, -1):
                    val = (val - mp.power(x, b) * ex) / b
            return +val
        return mp.gammainc(a_mp, x)


def bessel_i_bound(nu: int, x) -> mp.mpf:
    """Upper bound (x/2)^ν/ν! · exp(x²/(4(ν+1))) for I_ν(x), x ≥ 0."""
    x = mp.mpf(x)
    return (x / 2) ** nu / mp.factorial(nu) * mp.exp(x * x / (4 * (nu + 1)))


_BESSEL_MAX_TERMS = 10**6


def bessel_i(nu: int, x, ctx: PrecisionContext = DEFAULT_CONTEXT) -> mp.mpf:
    """Modified Bessel function I_ν(x) by its ascending series.

    All terms are positive, so the only error is truncation.  The series is
    run in binary fixed point (scaled to the first term, 64 guard bits) and
    stops once the term ratio is below 1/2 and the current term is below
    ``tol`` times the partial sum, which then bounds the whole tail.
    """
    nu = int(nu)
    if nu < 0:
        raise ValueError("bessel_i needs a non-negative integer order")
    with ctx.workprec():
        x = mp.mpf(x)
        if not x > 0:
            raise ValueError("bessel_i requires x > 0")
        P = ctx.working_precision + 64
        with mp.workprec(P):
            first = (x / 2) ** nu / mp.factorial(nu)
            e = int(mp.floor(mp.log(first, 2)))
            X = gmpy2.mpz(int(mp.floor(mp.ldexp(x * x / 4, P))))
            T = gmpy2.mpz(int(mp.floor(mp.ldexp(first, P - e))))
        tol = float(ctx.target_relative_tolerance)
        tol_fixed = gmpy2.mpz(int(tol * 2.0**60)) if tol < 1 else gmpy2.mpz(1) << 60
        total = T
        j = 0
        xq = float(x) ** 2 / 4
        while T:
            j += 1
            if j > _BESSEL_MAX_TERMS:
                raise OverflowError(f"I_{nu}({mp.nstr(x, 8)}) needs more than {_BESSEL_MAX_TERMS} series terms")
            T = ((T * X) >> P) // (j * (j + nu))
            total += T
            if 2 * xq < (j + 1) * (j + 1 + nu) and (T << 60) <= tol_fixed * total:
                break
        return mp.ldexp(mp.mpf(int(total)), e - P)


def integrate_semiline(
    f: Callable[[mp.mpf], mp.mpf],
    singular_exponent_hint: float = 0.0,
    ctx: PrecisionContext = DEFAULT_CONTEXT,
    error: bool = False,
):
    """∫₀^∞ f(y) dy for f with a y^α endpoint singularity (α = hint > -1)
    and exponential decay at infinity.

    (0, 1] is mapped by y = e^{-t} and [1, ∞) by y = 1 + t; both pieces are
    handled by tanh-sinh on [0, ∞).  Raises :class:`ConvergenceError` when the
    quadrature error estimate stays above tolerance.
    """
    if not singular_exponent_hint > -1:
        raise ValueError("integrand is not integrable at 0 (exponent <= -1)")
    with ctx.workprec():
        tol = ctx.tol

        def lower(t):
            y = mp.exp(-t)
            return f(y) * y

        def upper(t):
            return f(1 + t)

        # the lower piece decays like exp(-(1+α)t): stretch the breakpoints
        scale = 1 / (1 + mp.mpf(singular_exponent_hint))
        v1, e1 = mp.quad(lower, [0, 4 * scale, 32 * scale, mp.inf], error=True)
        v2, e2 = mp.quad(upper, [0, 4, 32, mp.inf], error=True)
        value = v1 + v2
        err = e1 + e2
        if err > tol * max(abs(value), tol):
            raise ConvergenceError(f"quadrature error estimate {mp.nstr(err, 3)} above tolerance")
        return (value, err) if error else value


def richardson_limit(samples: Sequence[tuple], ctx: PrecisionContext = DEFAULT_CONTEXT) -> Estimate:
    """Extrapolate (s, value) samples to s → 0 with Neville's scheme.

    Assumes value(s) = L + a₁s + a₂s² + …; the error estimate is the gap
    between the two highest-order extrapolants.  Raises
    :class:`ConvergenceError` when successive extrapolants fail to contract.
    """
    if len(samples) < 3:
        raise ValueError("richardson_limit needs at least 3 samples")
    with ctx.workprec():
        s = [mp.mpf(p[0]) for p in samples]
        v = [mp.mpmathify(p[1]) for p in samples]
        if any(si <= 0 for si in s):
            raise ValueError("sample abscissae must be positive")
        if any(s[i + 1] >= s[i] for i in range(len(s) - 1)):
            raise ValueError("sample abscissae must decrease")
        # diagonal[j] = extrapolant using samples 0..j
        table = list(v)
        diagonal = [table[-1]]
        n = len(s)
        for order in range(1, n):
            table = [
                (s[i] * table[i + 1] - s[i + order] * table[i]) / (s[i] - s[i + order])
                for i in range(n - order)
            ]
            diagonal.append(table[-1])
        steps = [abs(diagonal[i + 1] - diagonal[i]) for i in range(len(diagonal) - 1)]
        scale = max(abs(diagonal[-1]), ctx.tol)
        floor = 64 * mp.eps * scale
        if steps[-1] > floor and steps[-1] > steps[-2] and steps[-1] > ctx.tol * scale:
            raise ConvergenceError("Richardson extrapolants do not contract")
        return Estimate(diagonal[-1], steps[-1] + floor)
