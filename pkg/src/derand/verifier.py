"""Exact brute-force verification of constructed objects.

Every probability here is an exact rational count over the multiset, so a
passing report is a proof for that multiset, independent of how it was
produced.  Budgets guard the enumeration sizes; nothing is sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from itertools import combinations
from typing import Optional

from ._util import check_budget
from .algebra import LinearCode, encode
from .derandomizer import PotentialTrace
from .errors import ParameterError
from .sampleset import SampleMultiset, format_rational, words_as_masks


@dataclass
class VerificationReport:
    prop: str
    passed: bool
    max_deviation: Fraction
    threshold: Optional[Fraction]
    witness: str
    enumerated: int
    extras: dict = dc_field(default_factory=dict)

    def render_kv(self) -> str:
        parts = [
            f"property={self.prop}",
            f"passed={'true' if self.passed else 'false'}",
            f"max_deviation={format_rational(self.max_deviation)}",
        ]
        if self.threshold is not None:
            parts.append(f"threshold={format_rational(self.threshold)}")
        parts.append(f"witness={self.witness}")
        parts.append(f"enumerated={self.enumerated}")
        for k, v in self.extras.items():
            parts.append(f"{k}={v}")
        return "\n".join(parts) + "\n"

    def render_table(self) -> str:
        rows = [
            ("property", self.prop),
            ("passed", "yes" if self.passed else "NO"),
            ("max deviation", f"{format_rational(self.max_deviation)} "
                              f"(~{float(self.max_deviation):.6g})"),
        ]
        if self.threshold is not None:
            rows.append(("threshold", format_rational(self.threshold)))
        rows.append(("worst witness", self.witness))
        rows.append(("enumerated", str(self.enumerated)))
        rows.extend(self.extras.items())
        width = max(len(r[0]) for r in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows) + "\n"


def check_bias(
    ms: SampleMultiset, eps, budget: Optional[int] = None
) -> VerificationReport:
    """Max over all nonempty index sets I of
    |Pr[parity_I = 0] - Pr[parity_I = 1]|, exact."""
    if ms.alphabet != 2:
        raise ParameterError("bias is defined for binary sets")
    eps = Fraction(eps)
    n = ms.n
    check_budget(2**n - 1, "parity enumeration", budget)
    masks = words_as_masks(ms)
    size = len(masks)
    worst = Fraction(-1)
    worst_mask = 0
    for mask in range(1, 2**n):
        ones = 0
        for w in masks:
            ones += (w & mask).bit_count() & 1
        bias = abs(Fraction(size - 2 * ones, size))
        if bias > worst:
            worst = bias
            worst_mask = mask
    witness = "I={" + ",".join(
        str(i) for i in range(n) if (worst_mask >> i) & 1
    ) + "}"
    return VerificationReport(
        prop="bias",
        passed=worst <= eps,
        max_deviation=worst,
        threshold=eps,
        witness=witness,
        enumerated=2**n - 1,
    )


def _restricted_counts(ms: SampleMultiset, I: tuple[int, ...]) -> dict:
    counts: dict[tuple, int] = {}
    for w in ms.words:
        key = tuple(w[i] for i in I)
        counts[key] = counts.get(key, 0) + 1
    return counts


def check_kwise(
    ms: SampleMultiset,
    k: int,
    eps,
    norm: str = "linf",
    budget: Optional[int] = None,
) -> VerificationReport:
    """Distance of every k-coordinate restriction from uniform: max
    pointwise gap (linf), total variation doubled (l1), or relative gap
    against (1 -+ eps)/a^k (multiplicative)."""
    if norm not in ("linf", "l1", "multiplicative"):
        raise ParameterError(f"norm must be linf/l1/multiplicative, got {norm!r}")
    if not 1 <= k <= ms.n:
        raise ParameterError(f"need 1 <= k <= n={ms.n}, got k={k}")
    eps = Fraction(eps)
    a = ms.alphabet
    n_tuples = math.comb(ms.n, k)
    check_budget(n_tuples * (a**k + ms.size), "k-wise enumeration", budget)
    uniform = Fraction(1, a**k)
    size = ms.size
    worst = Fraction(-1)
    worst_witness = ""
    for I in combinations(range(ms.n), k):
        counts = _restricted_counts(ms, I)
        if norm == "l1":
            dev = Fraction(0)
            seen = sum(counts.values())
            assert seen == size
            covered = 0
            for key, c in counts.items():
                dev += abs(Fraction(c, size) - uniform)
                covered += 1
            dev += (a**k - covered) * uniform
            wit = f"I={list(I)}"
            if dev > worst:
                worst, worst_witness = dev, wit
        else:
            for pat in range(a**k):
                key = tuple((pat // a**j) % a for j in range(k))
                c = counts.get(key, 0)
                gap = abs(Fraction(c, size) - uniform)
                if norm == "multiplicative":
                    gap = gap / uniform
                if gap > worst:
                    worst = gap
                    worst_witness = f"I={list(I)} sigma={list(key)}"
    return VerificationReport(
        prop=f"kwise-{norm}",
        passed=worst <= eps,
        max_deviation=worst,
        threshold=eps,
        witness=worst_witness,
        enumerated=n_tuples * a**k,
        extras={"k": str(k)},
    )


def check_code_balance(
    code: LinearCode, eps, budget: Optional[int] = None
) -> VerificationReport:
    """Every nonzero codeword must carry each symbol between (1-eps)M/q
    and (1+eps)M/q times; also reports the implied minimum weight."""
    eps = Fraction(eps)
    q, k, M = code.q, code.k, code.m
    check_budget(q**k, "message enumeration", budget)
    lo = (1 - eps) * Fraction(M, q)
    hi = (1 + eps) * Fraction(M, q)
    worst = Fraction(-1)
    worst_witness = "none"
    min_weight = None
    passed = True
    msg = [0] * k
    for _ in range(q**k - 1):
        # odometer over F_q^k, skipping the zero message
        pos = 0
        while True:
            msg[pos] += 1
            if msg[pos] < q:
                break
            msg[pos] = 0
            pos += 1
        w = encode(code, tuple(msg))
        weight = sum(1 for s in w if s)
        if min_weight is None or weight < min_weight:
            min_weight = weight
        counts = [0] * q
        for s in w:
            counts[s] += 1
        for xi, c in enumerate(counts):
            dev = abs(Fraction(c) - Fraction(M, q)) / Fraction(M, q)
            if dev > worst:
                worst = dev
                worst_witness = f"u={list(msg)} xi={xi} count={c}"
            if not lo <= c <= hi:
                passed = False
    extras = {
        "block_length": str(M),
        "min_weight": str(min_weight),
        "weight_bound": format_rational(M - hi),
        "distance_claim": format_rational(Fraction(M * (q - 1), q)),
    }
    return VerificationReport(
        prop="code-balance",
        passed=passed,
        max_deviation=worst,
        threshold=eps,
        witness=worst_witness,
        enumerated=q**k - 1,
        extras=extras,
    )


def check_phf_density(
    ms: SampleMultiset,
    k: int,
    eps,
    collision_bound=None,
    budget: Optional[int] = None,
) -> VerificationReport:
    """Min over k-tuples of the fraction of family members mapping them
    injectively; optionally also the max pairwise collision frequency."""
    if not 1 <= k <= ms.n:
        raise ParameterError(f"need 1 <= k <= n={ms.n}, got k={k}")
    eps = Fraction(eps)
    n_tuples = math.comb(ms.n, k)
    check_budget(n_tuples * ms.size, "tuple enumeration", budget)
    size = ms.size
    min_density = Fraction(2)
    worst_witness = ""
    for I in combinations(range(ms.n), k):
        good = 0
        for w in ms.words:
            vals = [w[i] for i in I]
            if len(set(vals)) == k:
                good += 1
        density = Fraction(good, size)
        if density < min_density:
            min_density = density
            worst_witness = f"I={list(I)}"
    passed = min_density >= 1 - eps
    extras = {"min_density": format_rational(min_density)}
    if collision_bound is not None and ms.n >= 2:
        bound = Fraction(collision_bound)
        worst_pair = Fraction(-1)
        pair_witness = ""
        for i, j in combinations(range(ms.n), 2):
            coll = sum(1 for w in ms.words if w[i] == w[j])
            freq = Fraction(coll, size)
            if freq > worst_pair:
                worst_pair = freq
                pair_witness = f"({i},{j})"
        extras["max_pair_collision"] = format_rational(worst_pair)
        extras["collision_bound"] = format_rational(bound)
        extras["collision_witness"] = pair_witness
        passed = passed and worst_pair <= bound
    return VerificationReport(
        prop="phf-density",
        passed=passed,
        max_deviation=1 - min_density,
        threshold=eps,
        witness=worst_witness,
        enumerated=n_tuples * size,
        extras=extras,
    )


def check_trace(trace: PotentialTrace) -> VerificationReport:
    """Certify the recorded run: per-step potential never rises by more
    than the declared slack, the final bound is below 1, and a fully
    independent recomputation from the counters agrees."""
    failures = []
    prev = trace.p0_hi
    worst_jump = Fraction(0)
    for step in trace.steps:
        jump = step.p_hi - prev
        if jump > worst_jump:
            worst_jump = jump
        if step.p_hi > prev + trace.slack_step:
            failures.append(f"step {step.index}: {float(step.p_hi)} > prev + slack")
        prev = step.p_hi
    if trace.variant == "slack":
        if prev >= 1:
            failures.append(f"final potential {float(prev)} not < 1")
    elif prev > 1:
        failures.append(f"final potential {float(prev)} > 1")

    # independent recomputation: sum_i e_hi gamma^J alpha^(Z_i), exact
    J = len(trace.steps)
    hist: dict[tuple[int, int], int] = {}
    for ci, z in zip(trace.cls_index, trace.z_final):
        hist[(ci, z)] = hist.get((ci, z), 0) + 1
    recomputed = Fraction(0)
    for (ci, z), count in hist.items():
        cls = trace.classes[ci]
        if not 0 <= z <= J:
            failures.append(f"counter out of range: Z={z} at class {ci}")
            continue
        recomputed += count * cls.e_hi * cls.gamma**J * cls.alpha**z
    if recomputed > 1:
        failures.append(f"recomputed final potential {float(recomputed)} > 1")
    if trace.z_history is not None:
        prev_z = (0,) * trace.n_constraints
        for j, snap in enumerate(trace.z_history, start=1):
            for a, b in zip(prev_z, snap):
                if b - a not in (0, 1) or b > j:
                    failures.append(f"counter jump at step {j}")
                    break
            prev_z = snap

    return VerificationReport(
        prop="potential-trace",
        passed=not failures,
        max_deviation=worst_jump,
        threshold=trace.slack_step,
        witness=failures[0] if failures else f"final<={float(recomputed):.6g}",
        enumerated=len(trace.steps),
        extras={
            "recomputed_final": f"{float(recomputed):.12g}",
            "recorded_final": f"{float(prev):.12g}",
            "declared_slack": format_rational(trace.slack_step),
        },
    )


@dataclass
class BoundsReport:
    n: int
    k: int
    eps: float
    norm: str
    rows: dict
    warnings: list

    def render_text(self) -> str:
        lines = [
            f"size expressions for n={self.n}, k={self.k}, eps={self.eps:g} "
            f"({self.norm}); constant-free, up to unspecified constants",
        ]
        width = max(len(name) for name in self.rows)
        for name, val in self.rows.items():
            lines.append(f"  {name:<{width}}  {val:.6g}")
        for w in self.warnings:
            lines.append(f"  warning: {w}")
        return "\n".join(lines) + "\n"


def lower_bound_report(n: int, k: int, eps, norm: str = "linf") -> BoundsReport:
    """Evaluate the constant-free expressions inside the stated lower
    bounds, next to the upper-bound rows, for inspection only."""
    eps_f = float(Fraction(eps))
    if not 0 < eps_f < 1 or n < 2 or k < 0:
        raise ParameterError("need n >= 2, k >= 0, 0 < eps < 1")
    log_n = math.log2(n)
    twok = 2.0**k
    rows = {}
    warnings = []
    rows["upper poly-time Linf"] = log_n / (twok * eps_f**3)
    rows["upper poly-time Linf multiplicative"] = twok**2 * log_n / eps_f**3
    rows["upper poly-time L1"] = (twok + log_n) / eps_f**3
    rows["upper n^O(k)-time Linf"] = log_n / (twok * eps_f**2)
    rows["upper n^O(k)-time Linf multiplicative"] = twok * log_n / eps_f**2
    rows["upper n^O(k)-time L1"] = (twok + log_n) / eps_f**2
    arg = 1.0 / (2.0 ** (k + 1) * eps_f)
    if arg <= 1:
        warnings.append(
            f"Linf lower bound needs eps < 1/2^(k+1) = {1.0 / 2 ** (k + 1):g}"
        )
        rows["lower Linf"] = float("nan")
    else:
        rows["lower Linf"] = log_n / (twok * eps_f**2 * math.log2(arg))
    if k >= n / 2:
        warnings.append("Linf lower bound stated for k < n/2")
    if k >= 1 and eps_f <= n ** (-k / 5.0):
        warnings.append(f"L1 lower bound needs eps > 1/n^(k/5) = {n ** (-k / 5.0):g}")
        rows["lower L1"] = float("nan")
    else:
        rows["lower L1"] = max(k, 1) * log_n / (eps_f**2 * math.log2(1.0 / eps_f))
    warnings.append("hypothesis 1/poly(n) <= eps is reported as stated, not enforced")
    return BoundsReport(n=n, k=k, eps=eps_f, norm=norm, rows=rows, warnings=warnings)
