"""Numerics oracles: frozen 50-digit reference values and grid invariants.

Reference values below were computed independently with the decimal module
at 60 digits of working precision (ln via Decimal.ln), not with the
library's own interval arithmetic.
"""

from decimal import Decimal, getcontext
from fractions import Fraction

import pytest

from derand.errors import ParameterError
from derand.numerics import (
    DivergenceParams,
    Scalar,
    ceil_log2,
    exp,
    kl_divergence,
    ln,
    precision_budget,
    q_ary_entropy,
    relative_sample_bound,
    required_sample_size,
)

getcontext().prec = 60

# D(1/4 || 1/2), 50 digits
KL_QUARTER_HALF = Fraction(
    "0.13081203594113695912920180623371771041011778400680"
)
# D(2/5 || 1/2), 50 digits
KL_04_05 = Fraction("0.02013551355068887342051277896877497856859316852948")
# H_2(11/100), 50 digits
H2_011 = Fraction("0.49991595816452799564049959413027566263640075554317")


def dec_ln(x: Fraction) -> Decimal:
    return (Decimal(x.numerator) / Decimal(x.denominator)).ln()


def dec_kl(lam: Fraction, p: Fraction) -> Fraction:
    l = Decimal(lam.numerator) / Decimal(lam.denominator)
    v = l * dec_ln(lam / p) + (1 - l) * dec_ln((1 - lam) / (1 - p))
    return Fraction(str(v))


def contains(s: Scalar, value) -> bool:
    return s.lo <= Fraction(value) <= s.hi


class TestScalar:
    def test_exact_arithmetic(self):
        a = Scalar.exact(Fraction(1, 3))
        b = Scalar.exact(Fraction(1, 6))
        assert (a + b).lo == Fraction(1, 2) == (a + b).hi
        assert (a * b).lo == Fraction(1, 18)
        assert (a - b).hi == Fraction(1, 6)

    def test_interval_mul_signs(self):
        s = Scalar(Fraction(-2), Fraction(3))
        t = Scalar(Fraction(-1), Fraction(4))
        prod = s * t
        assert prod.lo == Fraction(-8) and prod.hi == Fraction(12)

    def test_pow_int(self):
        s = Scalar(Fraction(-2), Fraction(3))
        assert s.pow_int(2).lo == 0 and s.pow_int(2).hi == 9
        assert s.pow_int(3).lo == -8 and s.pow_int(3).hi == 27
        assert s.pow_int(0).lo == 1
        t = Scalar(Fraction(1, 2), Fraction(2))
        assert t.pow_int(-1).lo == Fraction(1, 2) and t.pow_int(-1).hi == 2

    def test_decide_le_with_slack(self):
        s = Scalar(Fraction(9, 10), Fraction(11, 10))
        # width 1/5; decidable whenever slack margin exceeds the width
        assert s.decide_le(1, Fraction(1, 4)) is True
        assert s.decide_le(Fraction(1, 2), Fraction(1, 4)) is False
        assert s.decide_le(1, 0) is None

    def test_div_by_zero_interval(self):
        with pytest.raises(ZeroDivisionError):
            Scalar.exact(1) / Scalar(Fraction(-1), Fraction(1))


class TestLnExp:
    @pytest.mark.parametrize("num,den", [(1, 3), (7, 10), (1, 100), (97, 13), (2, 1)])
    def test_ln_contains_reference(self, num, den):
        x = Fraction(num, den)
        s = ln(x, bits=96)
        assert contains(s, Fraction(str(dec_ln(x))))
        assert s.error_bound < Fraction(1, 10**20)

    @pytest.mark.parametrize("num,den", [(-1, 1), (-3, 7), (1, 2), (5, 1)])
    def test_exp_contains_reference(self, num, den):
        x = Fraction(num, den)
        s = exp(x, bits=96)
        ref = Fraction(str((Decimal(num) / Decimal(den)).exp()))
        assert contains(s, ref)

    def test_ln_domain(self):
        with pytest.raises(ParameterError):
            ln(Fraction(0))
        with pytest.raises(ParameterError):
            ln(Fraction(-1, 2))

    def test_doubled_precision_nests(self):
        # Refining never crosses a comparison decided at lower precision.
        for x in [Fraction(1, 3), Fraction(22, 7), Fraction(5, 99)]:
            coarse = ln(x, bits=64)
            fine = ln(x, bits=128)
            assert coarse.lo <= fine.lo <= fine.hi <= coarse.hi


class TestKlDivergence:
    def test_identical_is_exact_zero(self):
        d = kl_divergence(DivergenceParams(Fraction(1, 2), Fraction(1, 2)))
        assert d.is_exact and d.lo == 0

    def test_reference_value(self):
        d = kl_divergence(DivergenceParams(Fraction(1, 4), Fraction(1, 2)))
        assert contains(d, KL_QUARTER_HALF)
        assert d.error_bound < Fraction(1, 10**9)

    def test_domain_errors(self):
        with pytest.raises(ParameterError):
            DivergenceParams(Fraction(0), Fraction(1, 2))
        with pytest.raises(ParameterError):
            DivergenceParams(Fraction(1, 2), Fraction(1))

    def test_grid_against_decimal_oracle(self):
        # 100-point grid: reported enclosure always contains the 50-digit value
        pts = [(Fraction(i, 21), Fraction(j, 11)) for i in range(1, 21) for j in range(1, 6)]
        assert len(pts) == 100
        for lam, p in pts:
            d = kl_divergence(DivergenceParams(lam, p))
            assert contains(d, dec_kl(lam, p)), (lam, p)

    def test_pinsker_grid(self):
        for i in range(1, 20):
            for j in range(1, 6):
                lam, p = Fraction(i, 20), Fraction(j, 6)
                d = kl_divergence(DivergenceParams(lam, p))
                assert d.hi >= 2 * (lam - p) ** 2

    def test_relative_error_lower_bounds(self):
        # lambda=(1+eps)p: D >= p eps^2/3 ; lambda=(1-eps)p: D >= p eps^2/2
        for i in range(1, 11):
            for j in range(1, 11):
                eps = Fraction(i, 11)
                p = Fraction(j, 23)
                up = DivergenceParams((1 + eps) * p, p)
                lo = DivergenceParams((1 - eps) * p, p)
                assert kl_divergence(up).hi >= p * eps**2 / 3
                assert kl_divergence(lo).hi >= p * eps**2 / 2


class TestQaryEntropy:
    def test_binary_at_half(self):
        h = q_ary_entropy(Fraction(1, 2), 2)
        assert contains(h, 1) and h.error_bound < Fraction(1, 10**20)

    def test_ternary_at_two_thirds(self):
        h = q_ary_entropy(Fraction(2, 3), 3)
        assert contains(h, 1)

    def test_reference_value(self):
        h = q_ary_entropy(Fraction(11, 100), 2)
        assert contains(h, H2_011)

    def test_domain(self):
        with pytest.raises(ParameterError):
            q_ary_entropy(Fraction(0), 2)
        with pytest.raises(ParameterError):
            q_ary_entropy(Fraction(1, 2), 1)

    def test_grid_against_decimal_oracle(self):
        for i in range(1, 51):
            for q in (2, 3):
                p = Fraction(i, 51)
                qf = Fraction(q)
                ref = (
                    Decimal(p.numerator) / Decimal(p.denominator) * dec_ln((qf - 1) / p)
                    + (1 - Decimal(p.numerator) / Decimal(p.denominator)) * dec_ln(1 / (1 - p))
                ) / dec_ln(qf)
                assert contains(q_ary_entropy(p, q), Fraction(str(ref))), (p, q)


class TestRequiredSampleSize:
    def test_single_constraint_floor(self):
        m = required_sample_size([DivergenceParams(Fraction(1, 4), Fraction(1, 2))])
        assert m == 1

    def test_two_sided_half(self):
        cs = [
            DivergenceParams(Fraction(2, 5), Fraction(1, 2)),
            DivergenceParams(Fraction(3, 5), Fraction(1, 2)),
        ]
        assert required_sample_size(cs, N=2) == 35

    def test_corollary_bound_dominates(self):
        # N=8, p=1/2, relative eps=1/2 on both sides
        cs = []
        for _ in range(4):
            cs.append(DivergenceParams(Fraction(1, 4), Fraction(1, 2)))
            cs.append(DivergenceParams(Fraction(3, 4), Fraction(1, 2)))
        m = required_sample_size(cs)
        assert m <= relative_sample_bound(8, Fraction(1, 2), Fraction(1, 2)) == 50
        assert m == 16

    def test_minimality(self):
        cs = [
            DivergenceParams(Fraction(2, 5), Fraction(1, 2)),
            DivergenceParams(Fraction(3, 5), Fraction(1, 2)),
            DivergenceParams(Fraction(1, 8), Fraction(1, 4)),
        ]
        m = required_sample_size(cs)
        assert m > 1
        total_at = lambda mm: sum(
            exp(-(kl_divergence(c, 256) * mm), 256) for c in cs
        )
        assert total_at(m).certified_le(1)
        assert total_at(m - 1).certified_gt(1)

    def test_n_mismatch(self):
        with pytest.raises(ParameterError):
            required_sample_size([DivergenceParams(Fraction(1, 4), Fraction(1, 2))], N=3)

    def test_cap(self):
        cs = [DivergenceParams(Fraction(499999, 1000000), Fraction(1, 2)) for _ in range(10)]
        with pytest.raises(ParameterError):
            required_sample_size(cs, cap=10)


class TestPrecisionBudget:
    def test_tau_one_contributes_nothing(self):
        # 2m log tau vanishes at tau=1: growing m only moves the 2 log m term
        b1 = precision_budget(16, 4, 1, 1)
        b2 = precision_budget(32, 4, 1, 1)
        assert b2 - b1 == 2  # 2*(log2 32 - log2 16)

    def test_formula_at_unit_inputs(self):
        # B = ceil(0+0+0+0)+2 = 2, Delta = B+1+ceil(log2 2) = 4
        assert precision_budget(1, 1, 1, 1) == 4

    def test_doubling_m_at_tau_two(self):
        # B(2m)-B(m) = 2m + 2 when tau=2 and everything else is a power of two
        for m in (8, 16, 64):
            assert precision_budget(2 * m, 4, 2, 1) - precision_budget(m, 4, 2, 1) == 2 * m + 2

    def test_conditional_adds_coordinate_bits(self):
        assert precision_budget(16, 4, 2, 1, n_coords=8) == precision_budget(16, 4, 2, 1) + 3

    def test_ceil_log2(self):
        assert ceil_log2(1) == 0
        assert ceil_log2(2) == 1
        assert ceil_log2(Fraction(5, 2)) == 2
        assert ceil_log2(Fraction(1, 3)) == -1
