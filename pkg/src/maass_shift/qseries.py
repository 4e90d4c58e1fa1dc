"""Truncated q-expansions Σ c(n) qⁿ with a possibly negative leading exponent."""

from __future__ import annotations

import json
import math
from typing import Callable, Iterable, Mapping, Sequence

import mpmath as mp

from .numerics import DEFAULT_CONTEXT, PrecisionContext, PrecisionError

__all__ = ["QSeries", "multiply", "coefficient", "evaluate"]


def _is_exact(c) -> bool:
    return isinstance(c, int) and not isinstance(c, bool)


class QSeries:
    """Immutable truncated Fourier expansion.

    Coefficients are held densely from ``n_min`` up to the last stored
    exponent.  ``truncation_order`` is the largest exponent whose coefficient
    is known; ``None`` marks an exact Laurent polynomial.  Integer
    coefficients stay Python ints until something numeric touches them.
    """

    __slots__ = ("_n_min", "_coeffs", "_order")

    def __init__(self, coeffs: Sequence, n_min: int = 0, truncation_order: int | None = None):
        coeffs = tuple(coeffs)
        if truncation_order is not None:
            last = n_min + len(coeffs) - 1
            if last > truncation_order:
                coeffs = coeffs[: truncation_order - n_min + 1]
        self._n_min = int(n_min)
        self._coeffs = coeffs
        self._order = None if truncation_order is None else int(truncation_order)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, object], truncation_order: int | None = None) -> "QSeries":
        if not mapping:
            return cls((), 0, truncation_order)
        lo, hi = min(mapping), max(mapping)
        return cls([mapping.get(n, 0) for n in range(lo, hi + 1)], lo, truncation_order)

    @classmethod
    def monomial(cls, n: int, c=1) -> "QSeries":
        return cls((c,), n, None)

    @property
    def n_min(self) -> int:
        return self._n_min

    @property
    def truncation_order(self) -> int | None:
        return self._order

    @property
    def last_exponent(self) -> int:
        return self._n_min + len(self._coeffs) - 1

    @property
    def is_exact(self) -> bool:
        return all(_is_exact(c) for c in self._coeffs)

    def items(self) -> Iterable[tuple[int, object]]:
        for i, c in enumerate(self._coeffs):
            yield self._n_min + i, c

    def coefficient(self, n: int):
        if self._order is not None and n > self._order:
            raise IndexError(f"coefficient q^{n} lies beyond truncation order {self._order}")
        i = n - self._n_min
        if 0 <= i < len(self._coeffs):
            return self._coeffs[i]
        return 0

    __getitem__ = coefficient

    def coefficients(self, start: int, stop: int) -> list:
        """Coefficients for exponents start..stop inclusive."""
        return [self.coefficient(n) for n in range(start, stop + 1)]

    def leading_exponent(self) -> int | None:
        for n, c in self.items():
            if c != 0:
                return n
        return None

    def __len__(self) -> int:
        return len(self._coeffs)

    def __repr__(self) -> str:
        head = ", ".join(f"{n}: {c}" for n, c in list(self.items())[:4])
        return f"QSeries({{{head}, ...}}, n_min={self._n_min}, N={self._order})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, QSeries):
            return NotImplemented
        if self._order != other._order:
            return False
        lo = min(self._n_min, other._n_min)
        hi = max(self.last_exponent, other.last_exponent)
        return all(self.coefficient(n) == other.coefficient(n) for n in range(lo, hi + 1))

    def __hash__(self):
        return hash((self._n_min, self._order, self._coeffs))

    # arithmetic -------------------------------------------------------------

    def _joint_order(self, other: "QSeries") -> int | None:
        orders = [o for o in (self._order, other._order) if o is not None]
        return min(orders) if orders else None

    def __add__(self, other: "QSeries") -> "QSeries":
        if not isinstance(other, QSeries):
            return NotImplemented
        order = self._joint_order(other)
        lo = min(self._n_min, other._n_min)
        hi = max(self.last_exponent, other.last_exponent)
        if order is not None:
            hi = min(hi, order)
        return QSeries([self.coefficient(n) + other.coefficient(n) for n in range(lo, hi + 1)], lo, order)

    def __neg__(self) -> "QSeries":
        return QSeries([-c for c in self._coeffs], self._n_min, self._order)

    def __sub__(self, other: "QSeries") -> "QSeries":
        return self + (-other)

    def scale(self, factor) -> "QSeries":
        return QSeries([factor * c for c in self._coeffs], self._n_min, self._order)

    def __mul__(self, other):
        if isinstance(other, QSeries):
            return multiply(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def to_mp(self, ctx: PrecisionContext = DEFAULT_CONTEXT) -> "QSeries":
        with ctx.workprec():
            return QSeries([mp.mpc(c) for c in self._coeffs], self._n_min, self._order)

    # serialization ----------------------------------------------------------

    def to_json(self, digits: int = 60) -> str:
        rows = []
        for n, c in self.items():
            if _is_exact(c):
                rows.append([n, str(c), "0"])
            else:
                z = mp.mpc(c)
                rows.append([n, mp.nstr(z.real, digits), mp.nstr(z.imag, digits)])
        return json.dumps({"n_min": self._n_min, "N": self._order, "coeffs": rows})

    @classmethod
    def from_json(cls, text: str, ctx: PrecisionContext = DEFAULT_CONTEXT) -> "QSeries":
        data = json.loads(text)
        mapping = {}
        with ctx.workprec():
            for n, re_s, im_s in data["coeffs"]:
                if im_s == "0" and re_s.lstrip("-").isdigit():
                    mapping[int(n)] = int(re_s)
                else:
                    mapping[int(n)] = mp.mpc(mp.mpf(re_s), mp.mpf(im_s))
        n_min = data["n_min"]
        if not mapping:
            return cls((), n_min, data["N"])
        hi = max(mapping)
        return cls([mapping.get(n, 0) for n in range(n_min, hi + 1)], n_min, data["N"])


def multiply(a: QSeries, b: QSeries) -> QSeries:
    """Cauchy product through the largest exponent both factors determine."""
    n_min = a.n_min + b.n_min
    candidates = []
    if a.truncation_order is not None:
        candidates.append(a.truncation_order + b.n_min)
    if b.truncation_order is not None:
        candidates.append(b.truncation_order + a.n_min)
    order = min(candidates) if candidates else None
    hi = a.last_exponent + b.last_exponent
    if order is not None:
        hi = min(hi, order)
    if hi < n_min or len(a) == 0 or len(b) == 0:
        return QSeries((), n_min, order)
    ac, bc = a._coeffs, b._coeffs
    out = []
    for n in range(n_min, hi + 1):
        # index i into a, j into b with (a.n_min+i)+(b.n_min+j) = n
        t = n - n_min
        i_lo = max(0, t - (len(bc) - 1))
        i_hi = min(t, len(ac) - 1)
        s = 0
        for i in range(i_lo, i_hi + 1):
            ci = ac[i]
            if ci:
                s += ci * bc[t - i]
        out.append(s)
    return QSeries(out, n_min, order)


def coefficient(a: QSeries, n: int):
    return a.coefficient(n)


def _log_growth(kind: str, param: float) -> Callable[[int], float]:
    if kind == "poly":
        return lambda n: param * math.log(n)
    if kind == "exp_sqrt":
        return lambda n: param * math.sqrt(n)
    raise ValueError(f"unknown growth class {kind!r}")


def evaluate(
    a: QSeries,
    tau,
    ctx: PrecisionContext = DEFAULT_CONTEXT,
    growth: tuple[str, float] = ("poly", 12.0),
    check_tail: bool = True,
) -> mp.mpc:
    """Σ c(n) e^{2πinτ} over the stored exponents.

    For a truncated series the unknown tail is estimated by assuming
    |c(n)| ≤ C·g(n) with g from ``growth`` (``("poly", p)`` or
    ``("exp_sqrt", α)``) and C fitted to the stored coefficients; a tail above
    ``tol`` times the value raises :class:`PrecisionError`.
    """
    with ctx.workprec():
        tau = mp.mpc(tau)
        if not tau.imag > 0:
            raise ValueError("evaluate needs Im(tau) > 0")
        q = mp.expjpi(2 * tau)
        total = mp.mpc(0)
        n0 = a.n_min
        qn = q**n0
        for c in a._coeffs:
            if c:
                total += c * qn
            qn *= q
        if check_tail and a.truncation_order is not None:
            tail = _tail_estimate(a, float(tau.imag), growth)
            if tail > float(ctx.target_relative_tolerance) * max(float(abs(total)), 1e-300):
                raise PrecisionError(
                    f"q-series tail estimate {tail:.3g} exceeds tolerance at Im(tau)={float(tau.imag):.4g}"
                )
        return total


def _tail_estimate(a: QSeries, y: float, growth: tuple[str, float]) -> float:
    log_g = _log_growth(*growth)
    log_const = -math.inf
    for n, c in a.items():
        if n >= 1 and c:
            log_const = max(log_const, float(mp.log(abs(mp.mpc(c)))) - log_g(n))
    if log_const == -math.inf:
        return 0.0
    N = a.truncation_order
    # sum C g(n) e^{-2πny} over n > N until terms are negligible and falling
    tail = 0.0
    prev = math.inf
    n = N + 1
    while n <= N + 10**6:
        log_term = log_const + log_g(n) - 2 * math.pi * y * n
        term = math.exp(log_term) if log_term < 700 else math.inf
        tail += term
        if term <= 1e-30 * tail and term < prev:
            return tail
        prev = term
        n += 1
    return math.inf
