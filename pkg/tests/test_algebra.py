"""Field axioms, modulus table soundness, and BCH column independence."""

from itertools import combinations, product

import pytest

from derand.algebra import (
    _GF2_MODULI,
    BchColumnSet,
    LinearCode,
    bch_columns,
    encode,
    field_for_order,
    field_new,
    gf2_rank,
    verify_column_independence,
)
from derand.errors import DimensionMismatch, ParameterError, UnsupportedFieldError


def poly_is_irreducible_gf2(mod: int, deg: int) -> bool:
    """Trial division by every polynomial of degree 1..deg//2 over F_2."""

    def pmod(a, b):
        db = b.bit_length() - 1
        while a.bit_length() - 1 >= db:
            a ^= b << (a.bit_length() - 1 - db)
        return a

    for d in range(1, deg // 2 + 1):
        for low in range(2**d):
            divisor = (1 << d) | low
            if divisor in (1,):
                continue
            if pmod(mod, divisor) == 0:
                return False
    return True


class TestFieldTable:
    def test_all_moduli_irreducible(self):
        for e, mod in _GF2_MODULI.items():
            assert mod.bit_length() - 1 == e
            assert poly_is_irreducible_gf2(mod, e), f"degree {e} modulus reducible"


class TestFieldArithmetic:
    def test_f2(self):
        f = field_new(2, 1)
        assert f.add(1, 1) == 0 and f.mul(1, 1) == 1

    def test_f3(self):
        f = field_new(3)
        assert f.mul(2, 2) == 1
        assert f.add(2, 2) == 1
        assert f.inv(2) == 2

    def test_gf4(self):
        # x^2 = x + 1, so x*x = x+1: element 2 is x, 3 is x+1
        f = field_new(2, 2)
        assert f.mul(2, 2) == 3
        assert f.mul(2, 3) == 1  # x(x+1) = x^2+x = 1

    @pytest.mark.parametrize("p,e", [(2, 1), (3, 1), (5, 1), (2, 2), (2, 3), (2, 4), (2, 5), (2, 6)])
    def test_axioms_exhaustive(self, p, e):
        f = field_new(p, e)
        q = f.q
        elems = range(q)
        for a in elems:
            for b in elems:
                assert f.add(a, b) == f.add(b, a)
                assert f.mul(a, b) == f.mul(b, a)
                if a:
                    assert f.mul(a, f.inv(a)) == 1
        # associativity/distributivity on a spread of triples
        triples = [(a, b, c) for a in range(0, q, max(1, q // 7))
                   for b in range(0, q, max(1, q // 5))
                   for c in range(0, q, max(1, q // 3))]
        for a, b, c in triples:
            assert f.mul(a, f.mul(b, c)) == f.mul(f.mul(a, b), c)
            assert f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c))

    def test_unsupported(self):
        with pytest.raises(UnsupportedFieldError):
            field_new(4, 1)
        with pytest.raises(UnsupportedFieldError):
            field_new(3, 2)
        with pytest.raises(UnsupportedFieldError):
            field_new(2, 17)

    def test_field_for_order(self):
        assert field_for_order(8).e == 3
        assert field_for_order(37).p == 37
        with pytest.raises(UnsupportedFieldError):
            field_for_order(6)


class TestLinearCode:
    def test_zero_message(self):
        code = LinearCode(q=2, k=3, rows=tuple(product((0, 1), repeat=3)))
        assert encode(code, (0, 0, 0)) == (0,) * 8

    def test_hadamard_balance(self):
        # rows = all of F_2^k: every nonzero message has weight 2^(k-1)
        k = 4
        code = LinearCode(q=2, k=k, rows=tuple(product((0, 1), repeat=k)))
        for u in product((0, 1), repeat=k):
            if not any(u):
                continue
            w = encode(code, u)
            assert sum(w) == 2 ** (k - 1)

    def test_ternary_scalar(self):
        code = LinearCode(q=3, k=1, rows=((1,), (2,), (0,)))
        assert encode(code, (2,)) == (2, 1, 0)

    def test_linearity_random_pairs(self):
        f = field_for_order(8)
        rows = ((1, 3), (5, 2), (7, 7), (0, 4))
        code = LinearCode(q=8, k=2, rows=rows, field=f)
        msgs = [(a, b) for a in range(8) for b in range(8)]
        for u in msgs[::7]:
            for v in msgs[::11]:
                s = tuple(f.add(a, b) for a, b in zip(u, v))
                left = encode(code, s)
                right = tuple(
                    f.add(a, b) for a, b in zip(encode(code, u), encode(code, v))
                )
                assert left == right

    def test_dimension_mismatch(self):
        code = LinearCode(q=2, k=2, rows=((0, 1),))
        with pytest.raises(DimensionMismatch):
            encode(code, (1,))


class TestBchColumns:
    def test_t2_k3(self):
        cols = bch_columns(2, 3)
        assert cols.n == 3 and cols.m == 3
        assert verify_column_independence(cols)

    def test_t3_k3_length_bound(self):
        cols = bch_columns(3, 3)
        assert cols.n == 7 and cols.m == 4
        # Lemma bound: n <= 2^floor(2(m-1)/(k-1)) - 1 with equality here
        assert cols.n == 2 ** (2 * (cols.m - 1) // (cols.k - 1)) - 1

    def test_degenerate_k_rejected(self):
        with pytest.raises(ParameterError):
            bch_columns(2, 1)
        with pytest.raises(ParameterError):
            bch_columns(2, 4)
        with pytest.raises(ParameterError):
            bch_columns(1, 5)  # k-2 >= 2^t

    @pytest.mark.parametrize("t,k", [(2, 3), (3, 3), (4, 3), (3, 5), (4, 5)])
    def test_independence_exhaustive(self, t, k):
        cols = bch_columns(t, k)
        assert verify_column_independence(cols), (t, k)

    def test_rank_helper(self):
        assert gf2_rank([0b1, 0b10, 0b11]) == 2
        assert gf2_rank([0b101, 0b011, 0b110]) == 2
        assert gf2_rank([]) == 0
