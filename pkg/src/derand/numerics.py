"""Certified scalar arithmetic and the divergence formulas that size every
construction.

All quantities are tracked as closed intervals with exact rational
endpoints.  Rational operations (+, *, integer powers) are exact; ln and
exp are evaluated by interval arithmetic at a caller-controlled precision
and outward-rounded, so every Scalar is a hard enclosure of the real value
it stands for.  A comparison decided against an endpoint is therefore a
certificate, not an estimate.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import mpmath

from .errors import ParameterError, PrecisionError

RationalLike = Union[Fraction, int]

DEFAULT_BITS = 96
MAX_BITS = 1 << 14
SIZE_CAP_DEFAULT = 1 << 40

# mpmath's iv context keeps precision as global state.
_IV_LOCK = threading.Lock()


def _mpf_tuple_to_fraction(t) -> Fraction:
    sign, man, exp, _bc = t
    if man == 0 and exp != 0:
        raise PrecisionError(f"non-finite interval endpoint {t!r}")
    v = Fraction(man) * (Fraction(2) ** exp)
    return -v if sign else v


def _iv_bounds(x) -> tuple[Fraction, Fraction]:
    a, b = x._mpi_
    return _mpf_tuple_to_fraction(a), _mpf_tuple_to_fraction(b)


def _iv_fraction(fr: Fraction):
    return mpmath.iv.mpf(fr.numerator) / mpmath.iv.mpf(fr.denominator)


@dataclass(frozen=True)
class Scalar:
    """A real number enclosed in [lo, hi] with exact rational endpoints."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"inverted interval [{self.lo}, {self.hi}]")

    @classmethod
    def exact(cls, value: RationalLike) -> "Scalar":
        v = Fraction(value)
        return cls(v, v)

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    @property
    def error_bound(self) -> Fraction:
        """Guaranteed absolute error: the true value is within error_bound
        of either endpoint (and of the midpoint a fortiori)."""
        return self.hi - self.lo

    def __float__(self) -> float:
        return float((self.lo + self.hi) / 2)

    def __repr__(self) -> str:
        if self.is_exact:
            return f"Scalar({self.lo})"
        return f"Scalar[{float(self.lo)!r}, {float(self.hi)!r}]"

    def __neg__(self) -> "Scalar":
        return Scalar(-self.hi, -self.lo)

    def _coerce(self, other) -> "Scalar":
        if isinstance(other, Scalar):
            return other
        return Scalar.exact(other)

    def __add__(self, other) -> "Scalar":
        o = self._coerce(other)
        return Scalar(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __sub__(self, other) -> "Scalar":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Scalar":
        return self._coerce(other) + (-self)

    def __mul__(self, other) -> "Scalar":
        o = self._coerce(other)
        products = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Scalar(min(products), max(products))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Scalar":
        o = self._coerce(other)
        if o.lo <= 0 <= o.hi:
            raise ZeroDivisionError("divisor interval contains zero")
        return self * Scalar(1 / o.hi, 1 / o.lo)

    def pow_int(self, n: int) -> "Scalar":
        """Integer power, exact on the rational endpoints."""
        if n == 0:
            return Scalar.exact(1)
        if n < 0:
            if self.lo <= 0 <= self.hi:
                raise ZeroDivisionError("base interval contains zero")
            inv = Scalar(1 / self.hi, 1 / self.lo)
            return inv.pow_int(-n)
        a, b = self.lo**n, self.hi**n
        if n % 2 == 1:
            return Scalar(a, b)
        if self.lo >= 0:
            return Scalar(a, b)
        if self.hi <= 0:
            return Scalar(b, a)
        return Scalar(Fraction(0), max(a, b))

    # -- certified comparisons -------------------------------------------

    def certified_le(self, threshold: RationalLike, slack: RationalLike = 0) -> bool:
        """True only if the enclosed value is provably <= threshold + slack."""
        return self.hi <= Fraction(threshold) + Fraction(slack)

    def certified_ge(self, threshold: RationalLike) -> bool:
        return self.lo >= Fraction(threshold)

    def certified_gt(self, threshold: RationalLike) -> bool:
        return self.lo > Fraction(threshold)

    def decide_le(self, threshold: RationalLike, slack: RationalLike = 0):
        """Tri-state comparison against threshold with slack margin.

        Returns True (provably <= t+slack), False (provably > t), or None
        (undecided).  Whenever error_bound < slack one of the two definite
        answers is returned.
        """
        t = Fraction(threshold)
        if self.hi <= t + Fraction(slack):
            return True
        if self.lo > t:
            return False
        return None


def ln(x: Union[RationalLike, Scalar], bits: int = DEFAULT_BITS) -> Scalar:
    """Certified natural logarithm of a positive rational or Scalar."""
    xs = x if isinstance(x, Scalar) else Scalar.exact(x)
    if xs.lo <= 0:
        raise ParameterError(f"ln domain: need a positive argument, got [{xs.lo}, {xs.hi}]")
    with _IV_LOCK:
        old = mpmath.iv.prec
        try:
            mpmath.iv.prec = bits
            lo, _ = _iv_bounds(mpmath.iv.log(_iv_fraction(xs.lo)))
            _, hi = _iv_bounds(mpmath.iv.log(_iv_fraction(xs.hi)))
        finally:
            mpmath.iv.prec = old
    return Scalar(lo, hi)


def exp(x: Union[RationalLike, Scalar], bits: int = DEFAULT_BITS) -> Scalar:
    """Certified exponential of a rational or Scalar."""
    xs = x if isinstance(x, Scalar) else Scalar.exact(x)
    with _IV_LOCK:
        old = mpmath.iv.prec
        try:
            mpmath.iv.prec = bits
            lo, _ = _iv_bounds(mpmath.iv.exp(_iv_fraction(xs.lo)))
            _, hi = _iv_bounds(mpmath.iv.exp(_iv_fraction(xs.hi)))
        finally:
            mpmath.iv.prec = old
    return Scalar(lo, hi)


def log2(x: Union[RationalLike, Scalar], bits: int = DEFAULT_BITS) -> Scalar:
    return ln(x, bits) / ln(2, bits)


def ceil_log2(x: RationalLike) -> int:
    """Least integer g with 2**g >= x, exactly (x > 0)."""
    fr = Fraction(x)
    if fr <= 0:
        raise ParameterError("ceil_log2 needs a positive argument")
    g = fr.numerator.bit_length() - fr.denominator.bit_length() - 1
    while Fraction(2) ** g < fr:
        g += 1
    return g


@dataclass(frozen=True)
class DivergenceParams:
    """A (target, true-mean) pair for one Bernoulli tail constraint."""

    lam: Fraction
    p: Fraction

    def __post_init__(self):
        lam, p = Fraction(self.lam), Fraction(self.p)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "p", p)
        if not 0 < lam < 1:
            raise ParameterError(f"lambda must be in (0,1), got {lam}")
        if not 0 < p < 1:
            raise ParameterError(f"p must be in (0,1), got {p}")


def kl_divergence(params: DivergenceParams, bits: int = DEFAULT_BITS) -> Scalar:
    """D(lambda||p) = lambda ln(lambda/p) + (1-lambda) ln((1-lambda)/(1-p)).

    Nonnegative, zero exactly when lambda == p.
    """
    lam, p = params.lam, params.p
    if lam == p:
        return Scalar.exact(0)
    term1 = Scalar.exact(lam) * ln(lam / p, bits)
    term2 = Scalar.exact(1 - lam) * ln((1 - lam) / (1 - p), bits)
    d = term1 + term2
    # KL divergence is nonnegative; clamp rounding spill below zero.
    if d.lo < 0:
        d = Scalar(Fraction(0), d.hi)
    return d


def q_ary_entropy(p: RationalLike, q: RationalLike, bits: int = DEFAULT_BITS) -> Scalar:
    """H_q(p) = p log_q((q-1)/p) + (1-p) log_q(1/(1-p)) for 0 < p < 1, q > 1."""
    pf, qf = Fraction(p), Fraction(q)
    if not 0 < pf < 1:
        raise ParameterError(f"p must be in (0,1), got {pf}")
    if qf <= 1:
        raise ParameterError(f"q must exceed 1, got {qf}")
    num = Scalar.exact(pf) * ln((qf - 1) / pf, bits) + Scalar.exact(1 - pf) * ln(1 / (1 - pf), bits)
    return num / ln(qf, bits)


def _dedupe(constraints: Iterable[DivergenceParams]) -> list[tuple[DivergenceParams, int]]:
    counts: dict[DivergenceParams, int] = {}
    for c in constraints:
        counts[c] = counts.get(c, 0) + 1
    return list(counts.items())


def _tail_sum(groups, m: int, bits: int) -> Scalar:
    """sum_i exp(-D_i * m) over deduped constraint groups."""
    total = Scalar.exact(0)
    for params, count in groups:
        d = kl_divergence(params, bits)
        total = total + exp(-(d * m), bits) * count
    return total


def required_sample_size(
    constraints: Sequence[DivergenceParams],
    N: int | None = None,
    cap: int = SIZE_CAP_DEFAULT,
    bits: int = DEFAULT_BITS,
) -> int:
    """Least m >= 1 with sum_i exp(-D(lambda_i||p_i) * m) <= 1, certified.

    Always at most ceil(max_i ln N / D_i); minimal except at the m=1 floor.
    """
    constraints = list(constraints)
    if not constraints:
        raise ParameterError("need at least one constraint")
    if N is not None and N != len(constraints):
        raise ParameterError(f"N={N} does not match {len(constraints)} constraints")
    n = len(constraints)
    for c in constraints:
        if c.lam == c.p:
            raise ParameterError(f"constraint with lambda == p == {c.p} has zero divergence")
    groups = _dedupe(constraints)

    def feasible(m: int) -> bool:
        b = bits
        while True:
            s = _tail_sum(groups, m, b)
            if s.certified_le(1):
                return True
            if s.certified_gt(1):
                return False
            b *= 2
            if b > MAX_BITS:
                raise PrecisionError(
                    f"cannot decide sum exp(-D*m) <= 1 at m={m} within {MAX_BITS} bits"
                )

    # Upper end of the search range: the Theorem-style ceiling ln N / min D.
    d_min = None
    for params, _ in groups:
        d = kl_divergence(params, bits)
        while d.lo <= 0:
            bits2 = bits * 2
            if bits2 > MAX_BITS:
                raise PrecisionError("cannot separate divergence from zero")
            d = kl_divergence(params, bits2)
            bits = bits2
        if d_min is None or d.lo < d_min:
            d_min = d.lo
    ln_n_hi = ln(n, bits).hi if n > 1 else Fraction(0)
    hi = max(1, int(ln_n_hi / d_min) + 2)
    if hi > cap:
        raise ParameterError(f"required sample size exceeds cap {cap}")
    while not feasible(hi):
        hi = hi * 2
        if hi > cap:
            raise ParameterError(f"required sample size exceeds cap {cap}")

    lo = 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def relative_sample_bound(N: int, p_min: RationalLike, eps_min: RationalLike) -> int:
    """Convenience ceiling 3 ln N / (min_i p_i eps_i^2) for relative-error
    targets lambda = (1 +- eps) p; an upper bound on required_sample_size."""
    if N < 1:
        raise ParameterError("N must be at least 1")
    p, e = Fraction(p_min), Fraction(eps_min)
    if not 0 < p < 1 or not 0 < e < 1:
        raise ParameterError("need 0 < p < 1 and 0 < eps < 1")
    if N == 1:
        return 1
    ln_n = ln(N)
    bound = (3 * ln_n.hi) / (p * e * e)
    return max(1, -(-bound.numerator // bound.denominator))


def precision_budget(
    m: int,
    N: int,
    tau: Union[RationalLike, Scalar],
    mu: Union[RationalLike, Scalar],
    n_coords: int = 1,
) -> int:
    """Bit budget Delta = B + 1 + ceil(log2(tau+1)) with
    B = ceil(2m log2 tau + log2 N + 2 log2 m + log2(1/mu)) + 2,
    plus ceil(log2 n_coords) extra bits for the coordinate-by-coordinate
    method (its per-step error allowance shrinks from mu/(4m) to mu/(4mn)).
    """
    if m < 1 or N < 1 or n_coords < 1:
        raise ParameterError("m, N, n_coords must be positive")
    tau_hi = tau.hi if isinstance(tau, Scalar) else Fraction(tau)
    mu_lo = mu.lo if isinstance(mu, Scalar) else Fraction(mu)
    if tau_hi < 1:
        raise ParameterError(f"tau must be >= 1, got {tau_hi}")
    if not 0 < mu_lo <= 1:
        raise ParameterError(f"mu must be in (0,1], got {mu_lo}")
    total = Scalar.exact(0)
    if tau_hi > 1:
        total = total + log2(tau_hi, 64) * (2 * m)
    if N > 1:
        total = total + log2(N, 64)
    if m > 1:
        total = total + log2(m, 64) * 2
    if mu_lo < 1:
        total = total + log2(1 / mu_lo, 64)
    b = -(-total.hi.numerator // total.hi.denominator) + 2
    if n_coords > 1:
        b += ceil_log2(n_coords)
    return b + 1 + ceil_log2(tau_hi + 1)
