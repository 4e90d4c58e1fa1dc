"""Level-one classical forms: Δ and τ(n), Eisenstein series, completed E₂."""

from __future__ import annotations

import threading
from dataclasses import dataclass

import gmpy2
import mpmath as mp

from .numerics import DEFAULT_CONTEXT, PrecisionContext
from .qseries import QSeries, evaluate

__all__ = [
    "CuspForm",
    "EisensteinSeries",
    "delta_expansion",
    "delta_product_expansion",
    "tau_values",
    "eisenstein",
    "e2_star",
    "divisor_sigma_table",
]


@dataclass(frozen=True)
class CuspForm:
    weight: int
    fourier: QSeries
    name: str = ""

    def __post_init__(self):
        if self.weight % 2 or self.weight < 12:
            raise ValueError("level-one cusp forms need even weight >= 12")
        if self.fourier.n_min < 1 and any(c for n, c in self.fourier.items() if n <= 0):
            raise ValueError("cusp form expansion must vanish at exponents <= 0")

    @property
    def N(self) -> int:
        return self.fourier.truncation_order

    def a(self, n: int) -> int:
        if n <= 0:
            return 0
        return self.fourier.coefficient(n)

    def coefficient_list(self, N: int | None = None) -> list[int]:
        """[a(0), a(1), ..., a(N)] with a(0) = 0."""
        N = self.N if N is None else N
        if N > self.N:
            raise IndexError(f"expansion known only through q^{self.N}")
        return [0] + [self.fourier.coefficient(n) for n in range(1, N + 1)]

    def evaluate(self, tau, ctx: PrecisionContext = DEFAULT_CONTEXT) -> mp.mpc:
        return evaluate(self.fourier, tau, ctx, growth=("poly", self.weight / 2 + 1))

    def is_zero(self) -> bool:
        return not any(c for _, c in self.fourier.items())


@dataclass(frozen=True)
class EisensteinSeries:
    weight: int
    fourier: QSeries

    def evaluate(self, tau, ctx: PrecisionContext = DEFAULT_CONTEXT) -> mp.mpc:
        return evaluate(self.fourier, tau, ctx, growth=("poly", self.weight))


# --- τ(n) ---------------------------------------------------------------------

def delta_product_expansion(N: int) -> list[int]:
    """[τ(0)=0, τ(1), ..., τ(N)] from q∏(1-qⁿ)^24 by repeated multiplication.

    Quadratic in N; kept for small N and as an oracle for :func:`tau_values`.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    c = [0] * N
    c[0] = 1
    for n in range(1, N):
        for _ in range(24):
            for j in range(N - 1, n - 1, -1):
                c[j] -= c[j - n]
    return [0] + c


def _pack(coeffs: list[int], width: int) -> gmpy2.mpz:
    return gmpy2.mpz(int.from_bytes(b"".join(c.to_bytes(width, "little") for c in coeffs), "little"))


def _unpack(x: gmpy2.mpz, width: int, count: int) -> list[int]:
    x = int(x)
    raw = x.to_bytes((x.bit_length() + 7) // 8, "little")[: width * count].ljust(width * count, b"\0")
    return [int.from_bytes(raw[i * width:(i + 1) * width], "little") for i in range(count)]


def _square_truncated(a: list[int], count: int) -> list[int]:
    """Exact square of Σ a_i q^i through q^(count-1) via Kronecker substitution."""
    pos = [c if c > 0 else 0 for c in a]
    neg = [-c if c < 0 else 0 for c in a]
    bound = max(abs(c) for c in a)
    bits = 2 * bound.bit_length() + len(a).bit_length() + 2
    width = (bits + 7) // 8
    P, M = _pack(pos, width), _pack(neg, width)
    pp = _unpack(P * P, width, count)
    mm = _unpack(M * M, width, count)
    pm = _unpack(P * M, width, count)
    return [pp[i] + mm[i] - 2 * pm[i] for i in range(count)]


def _tau_fast(N: int) -> list[int]:
    # η³ = Σ (-1)^j (2j+1) q^{j(j+1)/2}, Δ = q (η³)^8
    e = [0] * N
    j = 0
    while j * (j + 1) // 2 < N:
        e[j * (j + 1) // 2] = (-1) ** j * (2 * j + 1)
        j += 1
    for _ in range(3):
        e = _square_truncated(e, N)
    return [0] + e


_tau_lock = threading.Lock()
_tau_cache: list[int] = [0]
_SMALL_N = 400


def tau_values(N: int) -> list[int]:
    """Exact Ramanujan τ(0..N) (τ(0) = 0), cached up to the largest N seen."""
    global _tau_cache
    if N < 1:
        raise ValueError("N must be >= 1")
    with _tau_lock:
        if len(_tau_cache) <= N:
            _tau_cache = delta_product_expansion(N) if N <= _SMALL_N else _tau_fast(N)
        return _tau_cache[: N + 1]


def delta_expansion(N: int) -> CuspForm:
    """Δ = q∏(1-qⁿ)^24 exactly through q^N."""
    t = tau_values(N)
    return CuspForm(12, QSeries(t[1:], 1, N), "delta")


# --- Eisenstein series -----------------------------------------------------

def divisor_sigma_table(power: int, N: int) -> list[int]:
    sig = [0] * (N + 1)
    for d in range(1, N + 1):
        dp = d**power
        for m in range(d, N + 1, d):
            sig[m] += dp
    return sig


_EISENSTEIN_FACTOR = {2: -24, 4: 240, 6: -504}


def eisenstein(weight: int, N: int) -> EisensteinSeries:
    """E₂, E₄ or E₆ exactly through q^N (constant term 1)."""
    if weight not in _EISENSTEIN_FACTOR:
        raise ValueError("only weights 2, 4, 6 are provided")
    if N < 1:
        raise ValueError("N must be >= 1")
    sig = divisor_sigma_table(weight - 1, N)
    factor = _EISENSTEIN_FACTOR[weight]
    coeffs = [1] + [factor * sig[n] for n in range(1, N + 1)]
    return EisensteinSeries(weight, QSeries(coeffs, 0, N))


def e2_star(tau, N: int = 200, ctx: PrecisionContext = DEFAULT_CONTEXT) -> mp.mpc:
    """E₂*(τ) = E₂(τ) - 3/(π Im τ)."""
    with ctx.workprec():
        tau = mp.mpc(tau)
        if not tau.imag > 0:
            raise ValueError("e2_star needs Im(tau) > 0")
        return eisenstein(2, N).evaluate(tau, ctx) - 3 / (mp.pi * tau.imag)
