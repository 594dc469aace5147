"""Finite fields, linear codes, and the column sets behind the length
reduction from bias sets to k-wise independent sets.

Elements of GF(p^e) are plain ints in [0, p^e): residues for prime
fields, polynomial bit representations for p=2 extensions.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

from .errors import DimensionMismatch, ParameterError, UnsupportedFieldError

# Irreducible modulus for GF(2^e), e=2..16, as bitmask including the x^e
# term (so 0b111 is x^2+x+1).  All entries are primitive.
_GF2_MODULI = {
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1011011,
    7: 0b10000011,
    8: 0b100011101,
    9: 0b1000010001,
    10: 0b10001101111,
    11: 0b100000000101,
    12: 0b1000011101011,
    13: 0b10000000011011,
    14: 0b100000010101001,
    15: 0b1000000000110101,
    16: 0b10000000000101101,
}

_MAX_PRIME = 1 << 31


def _is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for n < 3.3e24."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _clmul(a: int, b: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def _clmod(a: int, mod: int, deg: int) -> int:
    while True:
        d = a.bit_length() - 1
        if d < deg:
            return a
        a ^= mod << (d - deg)


@dataclass(frozen=True)
class Field:
    """GF(p^e) with integer-coded elements."""

    p: int
    e: int
    modulus: Optional[int] = None  # bitmask incl. leading term; None for e=1

    @property
    def q(self) -> int:
        return self.p**self.e

    def check(self, a: int) -> int:
        if not 0 <= a < self.q:
            raise ParameterError(f"{a} is not an element of GF({self.q})")
        return a

    def add(self, a: int, b: int) -> int:
        if self.e > 1:
            return a ^ b
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        if self.e > 1:
            return a ^ b
        return (a - b) % self.p

    def neg(self, a: int) -> int:
        if self.e > 1:
            return a
        return (-a) % self.p

    def mul(self, a: int, b: int) -> int:
        if self.e > 1:
            return _clmod(_clmul(a, b), self.modulus, self.e)
        return a * b % self.p

    def pow(self, a: int, n: int) -> int:
        if n < 0:
            return self.pow(self.inv(a), -n)
        r, base = 1, a
        while n:
            if n & 1:
                r = self.mul(r, base)
            base = self.mul(base, base)
            n >>= 1
        return r

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no inverse")
        if self.e > 1:
            return self.pow(a, self.q - 2)
        return pow(a, self.p - 2, self.p)

    def dot(self, u: Sequence[int], v: Sequence[int]) -> int:
        if len(u) != len(v):
            raise DimensionMismatch(f"dot of lengths {len(u)} and {len(v)}")
        acc = 0
        for a, b in zip(u, v):
            acc = self.add(acc, self.mul(a, b))
        return acc


def field_new(p: int, e: int = 1) -> Field:
    """Construct GF(p^e): any prime p < 2^31 for e=1, GF(2^e) for e <= 16."""
    if e < 1:
        raise UnsupportedFieldError(f"extension degree must be >= 1, got {e}")
    if not _is_prime(p):
        raise UnsupportedFieldError(f"{p} is not prime")
    if p >= _MAX_PRIME:
        raise UnsupportedFieldError(f"prime fields supported up to 2^31, got {p}")
    if e == 1:
        return Field(p, 1, None)
    if p != 2 or e > 16:
        raise UnsupportedFieldError(
            f"extension fields limited to GF(2^e), e <= 16; got p={p}, e={e}"
        )
    return Field(2, e, _GF2_MODULI[e])


def field_for_order(q: int) -> Field:
    """Field of order q where q is prime or a supported power of two."""
    if q >= 4 and q & (q - 1) == 0:
        return field_new(2, q.bit_length() - 1)
    return field_new(q, 1)


@dataclass(frozen=True)
class LinearCode:
    """Code {(<u,s_1>,...,<u,s_m>) | u in F_q^k}; rows are the s_j."""

    q: int
    k: int
    rows: tuple[tuple[int, ...], ...]
    field: Field = dc_field(repr=False, compare=False, default=None)
    trace: object = dc_field(default=None, compare=False, repr=False)

    def __post_init__(self):
        fld = self.field if self.field is not None else field_for_order(self.q)
        object.__setattr__(self, "field", fld)
        if fld.q != self.q:
            raise ParameterError(f"field order {fld.q} != q={self.q}")
        rows = tuple(tuple(r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        for r in rows:
            if len(r) != self.k:
                raise DimensionMismatch(
                    f"generator row of length {len(r)}, expected k={self.k}"
                )
            for sym in r:
                fld.check(sym)

    @property
    def m(self) -> int:
        return len(self.rows)


def encode(code: LinearCode, u: Sequence[int]) -> tuple[int, ...]:
    """Codeword component j is the inner product <u, s_j> in F_q."""
    if len(u) != code.k:
        raise DimensionMismatch(f"message length {len(u)}, expected {code.k}")
    return tuple(code.field.dot(u, row) for row in code.rows)


@dataclass(frozen=True)
class BchColumnSet:
    """n = 2^t - 1 columns over F_2, column j the stacked bit
    representations of (1, x_j, x_j^3, ..., x_j^(k-2)) for the j-th
    nonzero element of GF(2^t); any <= k columns are linearly
    independent."""

    t: int
    k: int
    columns: tuple[int, ...]  # bitmasks of length m, LSB = first row

    @property
    def n(self) -> int:
        return len(self.columns)

    @property
    def m(self) -> int:
        return 1 + self.t * (self.k - 1) // 2


def bch_columns(t: int, k: int) -> BchColumnSet:
    """Columns (1, x, x^3, ..., x^(k-2)) over GF(2^t), bit-expanded."""
    if k < 3 or k % 2 == 0:
        raise ParameterError(f"k must be an odd integer >= 3, got {k}")
    if t < 1:
        raise ParameterError(f"t must be >= 1, got {t}")
    if not k - 2 < 2**t:
        raise ParameterError(f"need k-2 < 2^t, got k={k}, t={t}")
    fld = field_new(2, t) if t > 1 else field_new(2, 1)
    powers = list(range(1, k - 1, 2))  # 1, 3, ..., k-2
    cols = []
    for x in range(1, 2**t):
        bits = [1]
        for pw in powers:
            y = fld.pow(x, pw)
            bits.extend((y >> b) & 1 for b in range(t))
        cols.append(sum(b << i for i, b in enumerate(bits)))
    out = BchColumnSet(t=t, k=k, columns=tuple(cols))
    # Lemma-style length accounting: n == 2^(2(m-1)/(k-1)) - 1 exactly
    assert out.n == 2 ** (2 * (out.m - 1) // (k - 1)) - 1
    return out


def gf2_rank(vectors: Sequence[int]) -> int:
    """Rank over F_2 of bitmask-coded vectors."""
    basis: list[int] = []
    for v in vectors:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
            basis.sort(reverse=True)
    return len(basis)


def verify_column_independence(cols: BchColumnSet, limit: int | None = None) -> bool:
    """Exhaustively check that every subset of <= k columns is independent
    over F_2 (exponential; only for small t, k)."""
    from itertools import combinations

    k = limit if limit is not None else cols.k
    vecs = cols.columns
    for size in range(1, k + 1):
        for subset in combinations(vecs, size):
            if gf2_rank(subset) < size:
                return False
    return True
