"""Greedy potential-function derandomizer.

Selects a multiset of sample points, one at a time, so that a certified
upper bound on the failure potential

    P_j = sum_i exp(-D(lambda_i||p_i) * M) * gamma_i^j * alpha_i^{Z_{j,i}}

never increases beyond a declared per-step slack and ends below 1, which
forces every empirical mean over the output to respect its target:
at least lambda for Lower constraints, at most lambda for Upper ones.

Two selection strategies share the engine: a full scan over an enumerated
space, and coordinate-by-coordinate extension over a product space driven
by exact conditional means.  All multiplier arithmetic is exact rational;
only the exp(-D*M) factors carry interval width, so a candidate
comparison is a certificate.  Working precision starts low and doubles on
demand up to the worst-case bit budget.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from itertools import islice
from typing import Any, Callable, Iterable, Optional, Sequence

from . import numerics
from ._util import check_budget
from .errors import (
    BudgetError,
    ContractError,
    InfeasibleError,
    ParameterError,
    PrecisionError,
)
from .numerics import DivergenceParams, Scalar


class Direction(enum.Enum):
    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True)
class ConstraintSpec:
    """One 0/1 random variable with its true mean p and target lambda.

    Lower direction demands an empirical mean >= lambda (requires
    lambda < p <= true mean); Upper demands <= lambda (lambda > p >= true
    mean).  p in {0,1} is rejected: the multipliers divide by p(1-p).
    """

    id: Any
    p: Fraction
    lam: Fraction
    direction: Direction

    def __post_init__(self):
        p, lam = Fraction(self.p), Fraction(self.lam)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "lam", lam)
        if not 0 < p < 1:
            raise ParameterError(f"constraint {self.id}: p must be in (0,1), got {p}")
        if not 0 < lam < 1:
            raise ParameterError(f"constraint {self.id}: lambda must be in (0,1), got {lam}")
        if self.direction is Direction.LOWER and not lam < p:
            raise ParameterError(
                f"constraint {self.id}: Lower needs lambda < p, got lambda={lam}, p={p}"
            )
        if self.direction is Direction.UPPER and not lam > p:
            raise ParameterError(
                f"constraint {self.id}: Upper needs lambda > p, got lambda={lam}, p={p}"
            )

    @property
    def alpha(self) -> Fraction:
        return (1 - self.p) * self.lam / (self.p * (1 - self.lam))

    @property
    def gamma(self) -> Fraction:
        return (1 - self.lam) / (1 - self.p)

    @property
    def divergence_params(self) -> DivergenceParams:
        return DivergenceParams(self.lam, self.p)


@dataclass(frozen=True)
class EnumeratedSpace:
    """A finite sample space given by explicit elements.

    evaluate(element, constraint) must return 0 or 1, deterministically.
    The uniform distribution over elements is assumed; each constraint's p
    must bound its uniform mean from the correct side (p <= mean for
    Lower, p >= mean for Upper).
    """

    elements: tuple
    evaluate: Callable[[Any, ConstraintSpec], int]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not self.elements:
            raise ParameterError("enumerated space needs at least one element")


@dataclass(frozen=True)
class ProductSpace:
    """S = S_1 x ... x S_n with exact conditional means per constraint.

    conditional_mean(constraint, prefix) returns
    E[X | x_1=prefix[0], ..., x_j=prefix[j-1]] as an exact Fraction, under
    the uniform product distribution.  With the empty prefix it must equal
    the constraint's p, and a full prefix must determine X (mean 0 or 1).

    touched(coord) optionally lists the indices (into the constraint list
    handed to the derandomizer) whose conditional mean can change when
    coordinate `coord` is fixed; every constraint must be determined by
    the union of its touched coordinates.  scan_coordinate, when supplied,
    is a bulk fast path with the same information content.
    """

    domains: tuple[tuple, ...]
    conditional_mean: Callable[[ConstraintSpec, tuple], Fraction]
    touched: Optional[Callable[[int], Sequence[int]]] = None
    scan_coordinate: Optional[
        Callable[[int, tuple, Sequence], list[list[tuple[int, Fraction]]]]
    ] = None

    def __post_init__(self):
        object.__setattr__(self, "domains", tuple(tuple(d) for d in self.domains))
        if not self.domains or any(len(d) == 0 for d in self.domains):
            raise ParameterError("every coordinate domain must be nonempty")

    @property
    def n(self) -> int:
        return len(self.domains)

    def verify_martingale(
        self,
        constraints: Sequence[ConstraintSpec],
        max_checks: int = 256,
    ) -> None:
        """Spot-check E[X|prefix] == avg_xi E[X|prefix+xi] on breadth-first
        prefixes; raises ContractError on the first violation."""
        prefixes: list[tuple] = [()]
        checked = 0
        while prefixes and checked < max_checks:
            prefix = prefixes.pop(0)
            if len(prefix) >= self.n:
                continue
            dom = self.domains[len(prefix)]
            for c in constraints:
                parent = self.conditional_mean(c, prefix)
                avg = sum(self.conditional_mean(c, prefix + (xi,)) for xi in dom)
                if avg != parent * len(dom):
                    raise ContractError(
                        f"martingale violation for constraint {c.id} at prefix {prefix}"
                    )
                checked += 1
                if checked >= max_checks:
                    return
            prefixes.extend(prefix + (xi,) for xi in islice(dom, 4))


@dataclass(frozen=True)
class TraceClass:
    """Shared multiplier data for all constraints with one (p, lambda,
    direction) signature."""

    p: Fraction
    lam: Fraction
    direction: Direction
    alpha: Fraction
    gamma: Fraction
    d_lo: Fraction
    d_hi: Fraction
    e_lo: Fraction
    e_hi: Fraction
    count: int


@dataclass(frozen=True)
class TraceStep:
    index: int
    choice: str
    p_lo: Fraction
    p_hi: Fraction


@dataclass
class PotentialTrace:
    """Certificate of one derandomizer run: per-step potential bounds plus
    everything needed to recompute the final potential from the counters."""

    method: str
    variant: str
    m: int
    m_out: int
    n_constraints: int
    n_coords: int
    mu_lb: Fraction
    tau: Fraction
    budget_bits: int
    bits_used: int
    slack_step: Fraction
    slack_coord: Optional[Fraction]
    feas_lo: Fraction
    feas_hi: Fraction
    p0_lo: Fraction
    p0_hi: Fraction
    classes: tuple[TraceClass, ...]
    cls_index: tuple[int, ...]
    z_final: tuple[int, ...] = ()
    steps: tuple[TraceStep, ...] = ()
    z_history: Optional[tuple[tuple[int, ...], ...]] = None

    @property
    def final_potential(self) -> Scalar:
        if not self.steps:
            return Scalar(self.p0_lo, self.p0_hi)
        last = self.steps[-1]
        return Scalar(last.p_lo, last.p_hi)

    def dump(self, fh) -> None:
        """One line per step: index, chosen element, certified upper bound."""
        fh.write(
            f"# trace method={self.method} variant={self.variant} m={self.m} "
            f"m_out={self.m_out} N={self.n_constraints} bits={self.bits_used}\n"
        )
        fh.write(f"0\t<init>\t{float(self.p0_hi):.12g}\n")
        for s in self.steps:
            fh.write(f"{s.index}\t{s.choice}\t{float(s.p_hi):.12g}\n")

    def digest(self) -> str:
        import hashlib
        import io

        buf = io.StringIO()
        self.dump(buf)
        return hashlib.sha256(buf.getvalue().encode()).hexdigest()


def _cdiv(a: int, b: int) -> int:
    return -((-a) // b)


class _Refine(Exception):
    """Internal: working precision is insufficient at the current step."""


class _Class:
    __slots__ = (
        "p", "lam", "direction", "alpha", "gamma", "members",
        "d", "e", "e_lo_int", "e_hi_int",
        "gamma_pow", "alpha_pows", "t1",
        "alpha_minus_1", "one_minus_inv_gamma",
    )

    def __init__(self, spec: ConstraintSpec):
        self.p = spec.p
        self.lam = spec.lam
        self.direction = spec.direction
        self.alpha = spec.alpha
        self.gamma = spec.gamma
        self.alpha_minus_1 = self.alpha - 1
        self.one_minus_inv_gamma = 1 - 1 / self.gamma
        self.members = 0
        self.d: Scalar | None = None
        self.e: Scalar | None = None
        self.e_lo_int = 0
        self.e_hi_int = 0
        self.gamma_pow = Fraction(1)   # gamma^(j+1) during step j
        self.alpha_pows = [Fraction(1)]
        self.t1: dict[int, tuple[int, int]] = {}

    def key(self):
        return (self.p, self.lam, self.direction)


class _Engine:
    """Shared machinery for both selection strategies."""

    def __init__(
        self,
        constraints: Sequence[ConstraintSpec],
        m: Optional[int],
        *,
        n_coords: int = 1,
        variant: str = "slack",
        bits: int = 64,
        minimize: bool = False,
        trace_full: bool = False,
        budget: Optional[int] = None,
    ):
        if variant not in ("slack", "exact"):
            raise ParameterError(f"variant must be 'slack' or 'exact', got {variant!r}")
        self.constraints = list(constraints)
        if not self.constraints:
            raise ParameterError("need at least one constraint")
        check_budget(len(self.constraints), "constraint system", budget)
        self.variant = variant
        self.minimize = minimize
        self.trace_full = trace_full
        self.bits = bits
        self.n_coords = n_coords

        # Group constraints sharing (p, lambda, direction): their
        # potential terms differ only through the integer counter Z.
        self.classes: list[_Class] = []
        index: dict[tuple, int] = {}
        self.cls_of: list[int] = []
        for spec in self.constraints:
            key = (spec.p, spec.lam, spec.direction)
            ci = index.get(key)
            if ci is None:
                ci = len(self.classes)
                index[key] = ci
                self.classes.append(_Class(spec))
            self.classes[ci].members += 1
            self.cls_of.append(ci)
        self._p_of = [spec.p for spec in self.constraints]

        self._compute_divergences()
        n = len(self.constraints)
        if m is None:
            m = numerics.required_sample_size(
                [c.divergence_params for c in self.constraints]
            )
        if m < 1:
            raise ParameterError(f"m must be at least 1, got {m}")
        self.m = m
        self.m_out = m + 1 if variant == "slack" else m

        self.mu_lb = min(Fraction(1), min(cls.d.lo for cls in self.classes))
        self.tau = max(max(cls.alpha, cls.gamma) for cls in self.classes)
        self.budget_bits = numerics.precision_budget(
            self.m, n, self.tau, self.mu_lb, n_coords=self.n_coords
        )
        self.max_bits = max(4 * bits, 2 * self.budget_bits + 64)

        # Feasibility: sum_i exp(-D_i m) <= 1, certified.
        feas = self._tail_sum(self.m)
        while feas.decide_le(1) is None:
            self._grow_bits("feasibility check")
            feas = self._tail_sum(self.m)
        if not feas.certified_le(1):
            raise InfeasibleError(
                f"sum exp(-D*m) = [{float(feas.lo)}, {float(feas.hi)}] > 1 at m={m}; "
                "increase m"
            )
        self.feas = feas

        self._refresh_e()
        p0 = self._p0()
        while p0.hi >= 1:
            # exact variant can sit arbitrarily close to 1; refine until
            # real headroom is visible
            self._grow_bits("initial potential")
            self._refresh_e()
            p0 = self._p0()
        self.p0 = p0
        headroom = 1 - p0.hi
        self.slack_step = min(
            self.mu_lb / (4 * self.m), headroom / (self.m_out + 1)
        )
        self.slack_coord = self.slack_step / self.n_coords if self.n_coords > 1 else self.slack_step

        self.Z = [0] * n
        self.counts: list[dict[int, int]] = [
            {0: cls.members} for cls in self.classes
        ]
        self.steps: list[TraceStep] = []
        self.z_snapshots: list[tuple[int, ...]] = []
        self.prev_p = p0

    # -- precision management -------------------------------------------

    def _grow_bits(self, where: str) -> None:
        self.bits *= 2
        if self.bits > self.max_bits:
            raise PrecisionError(
                f"cannot certify {where} within {self.max_bits} bits "
                f"(theorem budget {self.budget_bits})"
            )

    def _compute_divergences(self) -> None:
        kl_bits = max(self.bits, 96)
        for cls in self.classes:
            d = numerics.kl_divergence(DivergenceParams(cls.lam, cls.p), kl_bits)
            while d.lo <= 0:
                kl_bits *= 2
                if kl_bits > numerics.MAX_BITS:
                    raise PrecisionError("cannot separate divergence from zero")
                d = numerics.kl_divergence(DivergenceParams(cls.lam, cls.p), kl_bits)
            cls.d = d

    def _tail_sum(self, m: int) -> Scalar:
        total = Scalar.exact(0)
        for cls in self.classes:
            total = total + numerics.exp(-(cls.d * m), self.bits) * cls.members
        return total

    def _refresh_e(self) -> None:
        """Recompute exp(-D * m_exp) enclosures at the current precision."""
        self._compute_divergences()
        scale = 1 << self.bits
        for cls in self.classes:
            cls.e = numerics.exp(-(cls.d * self.m_out), self.bits)
            cls.e_lo_int = (cls.e.lo.numerator * scale) // cls.e.lo.denominator
            cls.e_hi_int = _cdiv(cls.e.hi.numerator * scale, cls.e.hi.denominator)
            cls.t1.clear()

    # -- potential bookkeeping -------------------------------------------

    def _p0(self) -> Scalar:
        lo = sum(cls.e.lo * cls.members for cls in self.classes)
        hi = sum(cls.e.hi * cls.members for cls in self.classes)
        return Scalar(Fraction(lo), Fraction(hi))

    def _advance_gamma(self, j: int) -> None:
        """Set gamma_pow = gamma^(j+1) for the step selecting element j+1."""
        for cls in self.classes:
            cls.gamma_pow = cls.gamma ** (j + 1)
            cls.t1.clear()

    def _t1(self, ci: int, z: int) -> tuple[int, int]:
        """Certified bounds on exp(-D m_exp) * gamma^(j+1) * alpha^z, as
        integers at scale 2^bits."""
        cls = self.classes[ci]
        cached = cls.t1.get(z)
        if cached is not None:
            return cached
        pows = cls.alpha_pows
        while len(pows) <= z:
            pows.append(pows[-1] * cls.alpha)
        f = cls.gamma_pow * pows[z]
        num, den = f.numerator, f.denominator
        val = ((cls.e_lo_int * num) // den, _cdiv(cls.e_hi_int * num, den))
        cls.t1[z] = val
        return val

    def _histogram_potential(self) -> Scalar:
        """P_j recomputed from the per-class Z histograms and t1 tables."""
        lo = 0
        hi = 0
        for ci, cnt in enumerate(self.counts):
            for z, c in cnt.items():
                tlo, thi = self._t1(ci, z)
                lo += c * tlo
                hi += c * thi
        scale = 1 << self.bits
        return Scalar(Fraction(lo, scale), Fraction(hi, scale))

    def _apply(self, ones: Iterable[int]) -> None:
        for i in ones:
            ci = self.cls_of[i]
            z = self.Z[i]
            cnt = self.counts[ci]
            cnt[z] -= 1
            if not cnt[z]:
                del cnt[z]
            cnt[z + 1] = cnt.get(z + 1, 0) + 1
            self.Z[i] = z + 1

    def _record_step(self, j: int, choice_repr: str, diff_hi: Fraction) -> None:
        hist = self._histogram_potential()
        chained_hi = self.prev_p.hi + diff_hi
        p = Scalar(hist.lo, min(hist.hi, chained_hi))
        self.steps.append(TraceStep(j + 1, choice_repr, p.lo, p.hi))
        self.prev_p = p
        if self.trace_full:
            self.z_snapshots.append(tuple(self.Z))

    def _finish(self, method: str) -> PotentialTrace:
        final = self.prev_p
        if final.hi > 1:
            raise PrecisionError(
                f"final potential bound {float(final.hi)} exceeds 1"
            )
        classes = tuple(
            TraceClass(
                p=cls.p, lam=cls.lam, direction=cls.direction,
                alpha=cls.alpha, gamma=cls.gamma,
                d_lo=cls.d.lo, d_hi=cls.d.hi,
                e_lo=cls.e.lo, e_hi=cls.e.hi,
                count=cls.members,
            )
            for cls in self.classes
        )
        return PotentialTrace(
            method=method,
            variant=self.variant,
            m=self.m,
            m_out=self.m_out,
            n_constraints=len(self.constraints),
            n_coords=self.n_coords,
            mu_lb=self.mu_lb,
            tau=self.tau,
            budget_bits=self.budget_bits,
            bits_used=self.bits,
            slack_step=self.slack_step,
            slack_coord=self.slack_coord if self.n_coords > 1 else None,
            feas_lo=self.feas.lo,
            feas_hi=self.feas.hi,
            p0_lo=self.p0.lo,
            p0_hi=self.p0.hi,
            classes=classes,
            cls_index=tuple(self.cls_of),
            z_final=tuple(self.Z),
            steps=tuple(self.steps),
            z_history=tuple(self.z_snapshots) if self.trace_full else None,
        )


def _base0(engine: _Engine) -> tuple[Fraction, Fraction]:
    """sum_i T1_i * (1 - 1/gamma_i): the diff of a candidate with all
    X_i = 0 against the current potential."""
    lo = Fraction(0)
    hi = Fraction(0)
    scale = 1 << engine.bits
    for ci, cnt in enumerate(engine.counts):
        slo = 0
        shi = 0
        for z, c in cnt.items():
            tlo, thi = engine._t1(ci, z)
            slo += c * tlo
            shi += c * thi
        t = engine.classes[ci].one_minus_inv_gamma
        if t >= 0:
            lo += t * Fraction(slo, scale)
            hi += t * Fraction(shi, scale)
        else:
            lo += t * Fraction(shi, scale)
            hi += t * Fraction(slo, scale)
    return lo, hi


class _EnumeratedRun(_Engine):
    def __init__(self, space: EnumeratedSpace, constraints, m, **kw):
        budget = kw.get("budget")
        super().__init__(constraints, m, n_coords=1, **kw)
        self.space = space
        n = len(self.constraints)
        size = len(space.elements)
        self._ones: list[tuple[int, ...]] | None = None
        try:
            check_budget(size * n, "X matrix precomputation", budget)
        except BudgetError:
            self._ones = None
        else:
            ones = []
            col_sums = [0] * n
            for elem in space.elements:
                row = []
                for i, spec in enumerate(self.constraints):
                    x = space.evaluate(elem, spec)
                    if x not in (0, 1):
                        raise ContractError(
                            f"evaluate returned {x!r} for constraint {spec.id}"
                        )
                    if x:
                        row.append(i)
                        col_sums[i] += 1
                ones.append(tuple(row))
            self._ones = ones
            for i, spec in enumerate(self.constraints):
                mean = Fraction(col_sums[i], size)
                if spec.direction is Direction.LOWER and spec.p > mean:
                    raise ContractError(
                        f"constraint {spec.id}: Lower needs p <= uniform mean, "
                        f"got p={spec.p} > {mean}"
                    )
                if spec.direction is Direction.UPPER and spec.p < mean:
                    raise ContractError(
                        f"constraint {spec.id}: Upper needs p >= uniform mean, "
                        f"got p={spec.p} < {mean}"
                    )

    def _ones_of(self, idx: int) -> tuple[int, ...]:
        if self._ones is not None:
            return self._ones[idx]
        elem = self.space.elements[idx]
        return tuple(
            i for i, spec in enumerate(self.constraints)
            if self.space.evaluate(elem, spec)
        )

    def _select(self) -> tuple[int, tuple[int, ...], Fraction]:
        base_lo, base_hi = _base0(self)
        scale = 1 << self.bits
        best = None
        for idx in range(len(self.space.elements)):
            ones = self._ones_of(idx)
            sums: dict[int, tuple[int, int]] = {}
            for i in ones:
                ci = self.cls_of[i]
                tlo, thi = self._t1(ci, self.Z[i])
                acc = sums.get(ci)
                sums[ci] = (tlo, thi) if acc is None else (acc[0] + tlo, acc[1] + thi)
            diff_hi = base_hi
            for ci, (slo, shi) in sums.items():
                t = self.classes[ci].alpha_minus_1
                diff_hi += t * Fraction(shi if t > 0 else slo, scale)
            if diff_hi <= self.slack_step:
                if not self.minimize:
                    return idx, ones, diff_hi
                if best is None or diff_hi < best[2]:
                    best = (idx, ones, diff_hi)
        if best is not None:
            return best
        raise _Refine

    def run(self) -> tuple[tuple, PotentialTrace]:
        chosen = []
        for j in range(self.m_out):
            self._advance_gamma(j)
            while True:
                try:
                    idx, ones, diff_hi = self._select()
                    break
                except _Refine:
                    self._grow_bits(f"step {j + 1}")
                    self._refresh_e()
                    self._advance_gamma(j)
            self._apply(ones)
            chosen.append(self.space.elements[idx])
            self._record_step(j, repr(self.space.elements[idx]), diff_hi)
        return tuple(chosen), self._finish("enumerated")


class _ConditionalRun(_Engine):
    def __init__(self, space: ProductSpace, constraints, m, **kw):
        super().__init__(constraints, m, n_coords=space.n, **kw)
        self.space = space
        for spec in self.constraints:
            root = space.conditional_mean(spec, ())
            if root != spec.p:
                raise ContractError(
                    f"constraint {spec.id}: conditional_mean(()) = {root} != p = {spec.p}"
                )
        if space.touched is None:
            self._touched = [list(range(len(self.constraints)))] * space.n
        else:
            self._touched = [list(space.touched(c)) for c in range(space.n)]

    def _candidate_means(self, coord: int, prefix: tuple, candidates):
        """For each candidate symbol, (index, new conditional mean) pairs
        over the constraints touched at this coordinate."""
        if self.space.scan_coordinate is not None:
            return self.space.scan_coordinate(coord, prefix, candidates)
        out = []
        for cand in candidates:
            ext = prefix + (cand,)
            out.append(
                [
                    (i, self.space.conditional_mean(self.constraints[i], ext))
                    for i in self._touched[coord]
                ]
            )
        return out

    def _select(self) -> tuple[tuple, list[int], Fraction]:
        prefix: tuple = ()
        cur_q: dict[int, Fraction] = {}
        elem_diff_hi = Fraction(0)
        scale = 1 << self.bits
        # certified acceptance on scaled integers: diff_hi_int <= this
        # implies the rational diff bound is <= slack_coord
        slack_int = (self.slack_coord.numerator * scale) // self.slack_coord.denominator
        Z = self.Z
        cls_of = self.cls_of
        p_of = self._p_of
        t1_caches = [cls.t1 for cls in self.classes]
        am1 = [
            (cls.alpha_minus_1.numerator, cls.alpha_minus_1.denominator)
            for cls in self.classes
        ]
        for coord in range(self.space.n):
            domain = self.space.domains[coord]
            all_means = self._candidate_means(coord, prefix, domain)
            best = None
            for cand, means in zip(domain, all_means):
                diff_hi_int = 0
                for i, q_new in means:
                    q_old = cur_q.get(i)
                    if q_old is None:
                        q_old = p_of[i]
                    if q_old == q_new:
                        continue
                    # dq without gcd normalisation; means may be Fractions
                    # or plain ints (fast paths emit 0/1)
                    nd = q_new.denominator
                    od = q_old.denominator
                    dn = q_new.numerator * od - q_old.numerator * nd
                    ci = cls_of[i]
                    cache = t1_caches[ci]
                    z = Z[i]
                    v = cache.get(z)
                    if v is None:
                        v = self._t1(ci, z)
                    an, ad = am1[ci]
                    num = an * dn
                    den = ad * nd * od
                    # outward (ceil) rounding keeps the bound sound
                    if num > 0:
                        diff_hi_int += -((-num * v[1]) // den)
                    else:
                        diff_hi_int += -((-num * v[0]) // den)
                if diff_hi_int <= slack_int:
                    if not self.minimize:
                        best = (cand, means, diff_hi_int)
                        break
                    if best is None or diff_hi_int < best[2]:
                        best = (cand, means, diff_hi_int)
            if best is None:
                raise _Refine
            cand, means, diff_hi_int = best
            prefix = prefix + (cand,)
            for i, q_new in means:
                cur_q[i] = q_new
            elem_diff_hi += Fraction(diff_hi_int, scale)

        if len(cur_q) != len(self.constraints):
            missing = set(range(len(self.constraints))) - set(cur_q)
            raise ContractError(
                f"{len(missing)} constraints never touched by any coordinate "
                f"(e.g. {self.constraints[next(iter(missing))].id})"
            )
        ones = []
        for i, q in cur_q.items():
            if q == 1:
                ones.append(i)
            elif q != 0:
                raise ContractError(
                    f"constraint {self.constraints[i].id} not determined by "
                    f"the full prefix (mean {q})"
                )
        return prefix, ones, elem_diff_hi

    def run(self) -> tuple[tuple, PotentialTrace]:
        chosen = []
        for j in range(self.m_out):
            self._advance_gamma(j)
            while True:
                try:
                    element, ones, diff_hi = self._select()
                    break
                except _Refine:
                    self._grow_bits(f"step {j + 1}")
                    self._refresh_e()
                    self._advance_gamma(j)
            self._apply(ones)
            chosen.append(element)
            self._record_step(j, repr(element), diff_hi)
        return tuple(chosen), self._finish("conditional")


def derandomize_enumerated(
    space: EnumeratedSpace,
    constraints: Sequence[ConstraintSpec],
    m: Optional[int] = None,
    *,
    variant: str = "slack",
    bits: int = 64,
    minimize: bool = False,
    trace_full: bool = False,
    budget: Optional[int] = None,
) -> tuple[tuple, PotentialTrace]:
    """Greedy selection by full scan: returns (chosen elements, trace).

    The output has m+1 elements (slack variant; m with variant="exact")
    and satisfies every constraint exactly: empirical mean >= lambda for
    Lower, <= lambda for Upper.
    """
    run = _EnumeratedRun(
        space, constraints, m,
        variant=variant, bits=bits, minimize=minimize,
        trace_full=trace_full, budget=budget,
    )
    return run.run()


def derandomize_conditional(
    space: ProductSpace,
    constraints: Sequence[ConstraintSpec],
    m: Optional[int] = None,
    *,
    variant: str = "slack",
    bits: int = 64,
    minimize: bool = False,
    trace_full: bool = False,
    budget: Optional[int] = None,
    check_contract: bool = False,
) -> tuple[tuple, PotentialTrace]:
    """Coordinate-by-coordinate greedy selection over a product space.

    Identical guarantee to derandomize_enumerated, with work per element
    proportional to sum_i |S_i| conditional-mean evaluations instead of
    |S_1 x ... x S_n|.
    """
    if check_contract:
        space.verify_martingale(constraints)
    run = _ConditionalRun(
        space, constraints, m,
        variant=variant, bits=bits, minimize=minimize,
        trace_full=trace_full, budget=budget,
    )
    return run.run()


def step_candidate_potential(
    trace: PotentialTrace,
    constraints: Sequence[ConstraintSpec],
    choice: Sequence,
) -> Scalar:
    """Candidate potential sum_i e_i gamma_i^(l+1) alpha_i^(Z_i) * F_i
    where l = len(trace.steps): F_i = alpha^X for a concrete 0/1 choice,
    or 1 + (alpha-1) q for a conditional mean q (prefix extension)."""
    if len(choice) != len(constraints) or len(constraints) != len(trace.cls_index):
        raise ParameterError("choice/constraints must align with the trace")
    step = len(trace.steps) + 1
    lo = Fraction(0)
    hi = Fraction(0)
    for i, spec in enumerate(constraints):
        cls = trace.classes[trace.cls_index[i]]
        z = trace.z_final[i]
        x = choice[i]
        if isinstance(x, int) and x in (0, 1):
            f = cls.alpha ** x
        else:
            q = Fraction(x)
            if not 0 <= q <= 1:
                raise ParameterError(f"conditional mean out of range: {q}")
            f = 1 + (cls.alpha - 1) * q
        weight = cls.gamma**step * cls.alpha**z * f
        lo += cls.e_lo * weight
        hi += cls.e_hi * weight
    return Scalar(lo, hi)
