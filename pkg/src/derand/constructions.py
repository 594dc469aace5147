"""Concrete constructions: balanced codes, bias sets, k-wise independent
sets in both norms, dense perfect hash families, and their composition.

Every builder is a thin driver: it lays out a constraint system, hands it
to the conditional derandomizer over the natural product space, and wraps
the chosen elements.  The returned object carries its PotentialTrace on
the .trace attribute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

from . import numerics
from ._util import check_budget
from .algebra import LinearCode, bch_columns, field_for_order
from .derandomizer import (
    ConstraintSpec,
    Direction,
    ProductSpace,
    derandomize_conditional,
)
from .errors import DimensionMismatch, ParameterError
from .sampleset import SampleMultiset, canonical_params, words_as_masks


def _frac_ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _provenance(name: str, params: dict, trace) -> str:
    inner = ",".join(f"{k}={v}" for k, v in sorted(params.items()))
    tag = f" trace={trace.digest()[:16]}" if trace is not None else ""
    return f"{name}({inner}){tag}"


# ---------------------------------------------------------------------------
# balanced codes and bias sets


def _canonical_vectors(q: int, k: int) -> list[tuple[tuple[int, ...], int]]:
    """Monic representatives (v_1..v_j, 1, 0, ..., 0) with their top index;
    one per nonzero vector of F_q^k up to leading-coefficient scaling."""
    out = []
    for top in range(k):
        for idx in range(q**top):
            v = []
            rem = idx
            for _ in range(top):
                v.append(rem % q)
                rem //= q
            v.append(1)
            v.extend(0 for _ in range(k - top - 1))
            out.append((tuple(v), top))
    return out


def build_balanced_code(
    q: int,
    k: int,
    eps,
    *,
    m: Optional[int] = None,
    variant: str = "slack",
) -> LinearCode:
    """A [M, k]_q linear code in which every nonzero codeword carries each
    symbol between (1-eps)M/q and (1+eps)M/q times.

    Constraints live on the canonical monic vectors only (scaling a
    codeword permutes symbol counts), with two-sided targets (1 -+ eps)/q.
    """
    eps = Fraction(eps)
    if not 0 < eps <= Fraction(1, 2):
        raise ParameterError(f"need 0 < eps <= 1/2, got {eps}")
    if k < 1:
        raise ParameterError(f"message length k must be >= 1, got {k}")
    fld = field_for_order(q)
    vs = _canonical_vectors(q, k)
    check_budget(2 * q * len(vs), "balanced-code constraint system")

    p = Fraction(1, q)
    lam_lo = (1 - eps) / q
    lam_hi = (1 + eps) / q
    constraints = []
    block_start = []
    for vi, (v, top) in enumerate(vs):
        block_start.append(len(constraints))
        for xi in range(q):
            constraints.append(
                ConstraintSpec(("code", vi, xi, "lo"), p, lam_lo, Direction.LOWER)
            )
            constraints.append(
                ConstraintSpec(("code", vi, xi, "hi"), p, lam_hi, Direction.UPPER)
            )
    by_top: list[list[int]] = [[] for _ in range(k)]
    v_at: list[list[int]] = [[] for _ in range(k)]
    for vi, (v, top) in enumerate(vs):
        v_at[top].append(vi)
        st = block_start[vi]
        by_top[top].extend(range(st, st + 2 * q))

    binary = q == 2
    if binary:
        masks = [sum(b << i for i, b in enumerate(v)) for v, _ in vs]

    def cond_mean(spec, prefix):
        _, vi, xi, _ = spec.id
        v, top = vs[vi]
        if len(prefix) <= top:
            return p
        sigma = fld.dot(v[: top + 1], prefix[: top + 1])
        return Fraction(1) if sigma == xi else Fraction(0)

    def scan_coordinate(coord, prefix, candidates):
        out = [[] for _ in candidates]
        if binary:
            pmask = sum(b << i for i, b in enumerate(prefix))
            for vi in v_at[coord]:
                base = (masks[vi] & pmask).bit_count() & 1
                st = block_start[vi]
                for ci, cand in enumerate(candidates):
                    sigma = base ^ cand
                    lst = out[ci]
                    lst.append((st + 2 * sigma, 1))
                    lst.append((st + 2 * sigma + 1, 1))
                    other = 1 - sigma
                    lst.append((st + 2 * other, 0))
                    lst.append((st + 2 * other + 1, 0))
            return out
        for vi in v_at[coord]:
            v, top = vs[vi]
            base = fld.dot(v[:coord], prefix)
            st = block_start[vi]
            for ci, cand in enumerate(candidates):
                sigma = fld.add(base, cand)
                lst = out[ci]
                for xi in range(q):
                    val = 1 if xi == sigma else 0
                    lst.append((st + 2 * xi, val))
                    lst.append((st + 2 * xi + 1, val))
        return out

    space = ProductSpace(
        domains=tuple(tuple(range(q)) for _ in range(k)),
        conditional_mean=cond_mean,
        touched=lambda c: by_top[c],
        scan_coordinate=scan_coordinate,
    )
    rows, trace = derandomize_conditional(space, constraints, m, variant=variant)
    return LinearCode(q=q, k=k, rows=rows, field=fld, trace=trace)


def build_bias_set(n: int, eps, *, m: Optional[int] = None, variant: str = "slack") -> SampleMultiset:
    """Multiset S in F_2^n whose every nonempty parity has bias <= eps:
    the generator rows of the binary eps-balanced code with k=n."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    eps = Fraction(eps)
    code = build_balanced_code(2, n, eps, m=m, variant=variant)
    params = {"n": n, "eps": eps}
    return SampleMultiset(
        kind="bias",
        alphabet=2,
        n=n,
        words=code.rows,
        params=canonical_params(params),
        provenance=_provenance("bias", params, code.trace),
        trace=code.trace,
    )


def nn_reduce(bias_set: SampleMultiset, n: int, k: int) -> SampleMultiset:
    """Length reduction: word s of length m maps to (<s, c_1>,...,<s, c_n>)
    over F_2 for k-wise independent BCH-style columns c_j.

    Any nonzero parity of <= k output bits equals a nonzero parity of
    input bits, so an eps-bias input yields an output that is eps-almost
    k-wise independent in L-infinity (and 2^(k/2) eps in L1).
    """
    if bias_set.alphabet != 2:
        raise ParameterError("length reduction needs a binary input set")
    if k % 2 == 0 or k < 3:
        raise ParameterError(f"k must be odd and >= 3, got {k}")
    m = bias_set.n
    if k - 1 > 2 * (m - 1):
        raise ParameterError(f"input length {m} too short for k={k}")
    t = 2 * (m - 1) // (k - 1)
    limit = 2**t - 1
    if n > limit:
        raise ParameterError(
            f"length bound violated: n={n} > 2^floor(2(m-1)/(k-1)) - 1 = {limit}"
        )
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if not k - 2 < 2**t:
        raise ParameterError(f"need k-2 < 2^t = {2**t}")
    cols = bch_columns(t, k)
    use = cols.columns[:n]
    words = []
    for wmask in words_as_masks(bias_set):
        words.append(tuple((wmask & c).bit_count() & 1 for c in use))
    src_eps = bias_set.param("eps")
    params = {"n": n, "k": k, "norm": "linf", "source": "nn-reduction"}
    if src_eps is not None:
        params["eps"] = src_eps
    return SampleMultiset(
        kind="kwise",
        alphabet=2,
        n=n,
        words=tuple(words),
        params=canonical_params(params),
        provenance=_provenance("nn_reduce", {"n": n, "k": k, "m": m, "t": t}, None)
        + f" source={bias_set.sha256[:16]}",
        trace=bias_set.trace,
    )


# ---------------------------------------------------------------------------
# k-wise independent sets


@dataclass(frozen=True)
class KwiseParams:
    """Parameters for an eps-almost k-wise independent set over {0,1}^n.

    norm "linf" bounds max_sigma |Pr[s_I = sigma] - 2^-k| <= eps (needs
    eps < 2^-k unless multiplicative, which targets (1 -+ eps) 2^-k);
    norm "l1" bounds the restricted L1 distance, grouping patterns by an
    r-bit prefix (r=None picks the time/size tradeoff automatically).
    """

    n: int
    k: int
    eps: Fraction
    norm: str = "linf"
    r: Optional[int] = None
    path: str = "auto"
    multiplicative: bool = False

    def __post_init__(self):
        object.__setattr__(self, "eps", Fraction(self.eps))
        if self.n < 1 or not 1 <= self.k <= self.n:
            raise ParameterError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.norm not in ("linf", "l1"):
            raise ParameterError(f"norm must be linf or l1, got {self.norm!r}")
        if not 0 < self.eps < 1:
            raise ParameterError(f"eps must be in (0,1), got {self.eps}")
        if self.norm == "linf" and not self.multiplicative:
            if self.eps >= Fraction(1, 2**self.k):
                raise ParameterError(
                    f"additive L-infinity needs eps < 1/2^k = 1/{2**self.k}, got {self.eps}"
                )
        if self.r is not None:
            if self.norm != "l1":
                raise ParameterError("r applies to the L1 construction only")
            if not 0 <= self.r < self.k:
                raise ParameterError(f"need 0 <= r < k, got r={self.r}")
        if self.path not in ("auto", "direct", "composed"):
            raise ParameterError(f"path must be auto/direct/composed, got {self.path!r}")


def _kwise_space(n: int, constraints: Sequence[ConstraintSpec], cond_mean):
    touched: list[list[int]] = [[] for _ in range(n)]
    for ci, spec in enumerate(constraints):
        for pos in spec.id[1]:
            touched[pos].append(ci)
    return ProductSpace(
        domains=tuple((0, 1) for _ in range(n)),
        conditional_mean=cond_mean,
        touched=lambda c: touched[c],
    )


def build_kwise_direct(params: KwiseParams, *, m: Optional[int] = None) -> SampleMultiset:
    """Point-probability constraints X_{I,sigma}(s) = [s_I = sigma] for
    every k-subset I and pattern sigma, two-sided."""
    if params.norm != "linf":
        raise ParameterError("direct builder handles the L-infinity norm")
    n, k, eps = params.n, params.k, params.eps
    p = Fraction(1, 2**k)
    if params.multiplicative:
        lam_lo, lam_hi = (1 - eps) * p, (1 + eps) * p
    else:
        lam_lo, lam_hi = p - eps, p + eps
    n_constraints = 2 * math.comb(n, k) * 2**k
    check_budget(n_constraints, "k-wise L-infinity constraint system")

    constraints = []
    for I in combinations(range(n), k):
        for pat in range(2**k):
            sigma = tuple((pat >> j) & 1 for j in range(k))
            constraints.append(
                ConstraintSpec(("kw", I, sigma, "lo"), p, lam_lo, Direction.LOWER)
            )
            constraints.append(
                ConstraintSpec(("kw", I, sigma, "hi"), p, lam_hi, Direction.UPPER)
            )

    def cond_mean(spec, prefix):
        _, I, sigma, _ = spec.id
        L = len(prefix)
        unfixed = 0
        for pos, want in zip(I, sigma):
            if pos < L:
                if prefix[pos] != want:
                    return Fraction(0)
            else:
                unfixed += 1
        return Fraction(1, 2**unfixed)

    space = _kwise_space(n, constraints, cond_mean)
    chosen, trace = derandomize_conditional(space, constraints, m)
    pd = {"n": n, "k": k, "eps": eps, "norm": "linf"}
    if params.multiplicative:
        pd["mode"] = "multiplicative"
    return SampleMultiset(
        kind="kwise",
        alphabet=2,
        n=n,
        words=chosen,
        params=canonical_params(pd),
        provenance=_provenance("kwise_direct", pd, trace),
        trace=trace,
    )


def auto_grouping_r(n: int, k: int, d: Optional[int] = None) -> int:
    """Prefix width r = max(ceil(k - log log n - log d), 0), d defaulting
    to k (the n^(2k)-time point of the tradeoff)."""
    d = k if d is None else d
    loglog = math.log2(math.log2(n)) if n > 2 else 0.0
    r = max(math.ceil(k - loglog - math.log2(d)), 0)
    return min(r, k - 1)


def build_kwise_l1(params: KwiseParams, *, m: Optional[int] = None) -> SampleMultiset:
    """Grouped constraints Z_{I,a,B}(s) = [s_I in {a} x B] for r-bit
    prefixes a and pattern sets B, with targets |B|/2^k -+ eps/2^(r+1);
    the telescoping over complements yields L1 distance <= eps."""
    if params.norm != "l1":
        raise ParameterError("build_kwise_l1 handles the L1 norm")
    n, k, eps = params.n, params.k, params.eps
    r = params.r if params.r is not None else auto_grouping_r(n, k)
    if k - r > 4:
        raise ParameterError(
            f"k - r = {k - r} > 4 means 2^(2^(k-r)) pattern sets; pick a larger r"
        )
    suffix = k - r
    n_patterns = 2**suffix
    theoretical_n = 2 ** (n_patterns + 1) * 2**r * math.comb(n, k)
    check_budget(theoretical_n, "k-wise L1 constraint system")

    margin = eps / 2 ** (r + 1)
    constraints = []
    for I in combinations(range(n), k):
        for a in range(2**r):
            for bmask in range(1, 2**n_patterns):
                size = bmask.bit_count()
                if r == 0 and size == n_patterns:
                    continue  # Z is identically 1
                p = Fraction(size, 2**k)
                lam_lo = p - margin
                lam_hi = p + margin
                if lam_lo > 0:
                    constraints.append(
                        ConstraintSpec(("l1", I, a, bmask, "lo"), p, lam_lo, Direction.LOWER)
                    )
                if lam_hi < 1:
                    constraints.append(
                        ConstraintSpec(("l1", I, a, bmask, "hi"), p, lam_hi, Direction.UPPER)
                    )

    def cond_mean(spec, prefix):
        _, I, a, bmask, _ = spec.id
        L = len(prefix)
        unfixed_a = 0
        for j in range(r):
            pos = I[j]
            if pos < L:
                if prefix[pos] != (a >> j) & 1:
                    return Fraction(0)
            else:
                unfixed_a += 1
        fixed_suffix = []
        unfixed_b = 0
        for j in range(suffix):
            pos = I[r + j]
            if pos < L:
                fixed_suffix.append((j, prefix[pos]))
            else:
                unfixed_b += 1
        count = 0
        rest = bmask
        while rest:
            b = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            if all((b >> j) & 1 == val for j, val in fixed_suffix):
                count += 1
        if not count:
            return Fraction(0)
        return Fraction(count, 2 ** (unfixed_a + unfixed_b))

    space = _kwise_space(n, constraints, cond_mean)
    chosen, trace = derandomize_conditional(space, constraints, m)
    pd = {"n": n, "k": k, "eps": eps, "norm": "l1", "r": r}
    return SampleMultiset(
        kind="kwise",
        alphabet=2,
        n=n,
        words=chosen,
        params=canonical_params(pd),
        provenance=_provenance("kwise_l1", pd, trace),
        trace=trace,
    )


# ---------------------------------------------------------------------------
# perfect hash families and composition


@dataclass(frozen=True)
class PhfParams:
    """(1-eps)-dense (n,q,k) perfect hash family parameters.

    Enforces q > 4k^2/eps (the size formula's regime; also implies the
    working condition q > ceil(k^2/eps)).  Plain integer alphabet: no
    field structure is used.
    """

    n: int
    q: int
    k: int
    eps: Fraction

    def __post_init__(self):
        object.__setattr__(self, "eps", Fraction(self.eps))
        if self.k < 1 or self.n < self.k:
            raise ParameterError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if not 0 < self.eps < 1:
            raise ParameterError(f"eps must be in (0,1), got {self.eps}")
        if self.q < 2:
            raise ParameterError(f"q must be >= 2, got {self.q}")
        if not Fraction(self.q) > 4 * self.k**2 / self.eps:
            raise ParameterError(
                f"need q > 4k^2/eps = {float(4 * self.k ** 2 / self.eps):g}, got q={self.q}"
            )


def _collision_family(
    n: int, q: int, h: int, *, m: Optional[int] = None
) -> tuple[tuple, object]:
    """Multiset over [q]^n with every pairwise collision frequency
    Pr[s_i = s_j] <= 1/h; needs q > h."""
    if not q > h >= 1:
        raise ParameterError(f"need q > h >= 1, got q={q}, h={h}")
    p = Fraction(1, q)
    lam = Fraction(1, h)
    constraints = [
        ConstraintSpec(("phf", i, j), p, lam, Direction.UPPER)
        for i, j in combinations(range(n), 2)
    ]
    check_budget(len(constraints), "collision constraint system")
    touched: list[list[int]] = [[] for _ in range(n)]
    for ci, spec in enumerate(constraints):
        touched[spec.id[2]].append(ci)

    def cond_mean(spec, prefix):
        _, i, j = spec.id
        if j < len(prefix):
            return Fraction(int(prefix[i] == prefix[j]))
        return p

    space = ProductSpace(
        domains=tuple(tuple(range(q)) for _ in range(n)),
        conditional_mean=cond_mean,
        touched=lambda c: touched[c],
    )
    return derandomize_conditional(space, constraints, m)


def build_phf(params: PhfParams, *, m: Optional[int] = None) -> SampleMultiset:
    """Family H in [q]^n where every k coordinates are all-distinct on at
    least a (1-eps) fraction of members, via pairwise collision bounds
    Pr[s_i = s_j] <= 1/h with h = ceil(k^2/eps)."""
    n, q, k, eps = params.n, params.q, params.k, params.eps
    pd = {"n": n, "q": q, "k": k, "eps": eps}
    if k == 1:
        # single-index tuples are trivially distinct; density 1
        return SampleMultiset(
            kind="phf",
            alphabet=q,
            n=n,
            words=((0,) * n,),
            params=canonical_params(pd),
            provenance=_provenance("phf", pd, None) + " trivial=k1",
        )
    h = _frac_ceil(Fraction(k * k) / eps)
    chosen, trace = _collision_family(n, q, h, m=m)
    pd["h"] = h
    return SampleMultiset(
        kind="phf",
        alphabet=q,
        n=n,
        words=chosen,
        params=canonical_params(pd),
        provenance=_provenance("phf", pd, trace),
        trace=trace,
    )


def compose(phf: SampleMultiset, inner: SampleMultiset) -> SampleMultiset:
    """S = {(v_{u_1}, ..., v_{u_n}) | u in the family, v in the inner set}.

    A (1-eps_H)-dense family composed with an eps_R-close inner set is
    (eps_H + eps_R)-close in L-infinity (and eps_R + 2 eps_H in L1)."""
    if inner.n != phf.alphabet:
        raise DimensionMismatch(
            f"inner word length {inner.n} != family alphabet {phf.alphabet}"
        )
    words = []
    for u in phf.words:
        for v in inner.words:
            words.append(tuple(v[sym] for sym in u))
    pd = {"n": phf.n, "path": "composed"}
    for key in ("k", "eps", "norm"):
        val = inner.param(key)
        if val is not None:
            pd[key] = val
    return SampleMultiset(
        kind=inner.kind,
        alphabet=inner.alphabet,
        n=phf.n,
        words=tuple(words),
        params=canonical_params(pd),
        provenance=(
            f"compose(family={phf.sha256[:16]}, inner={inner.sha256[:16]})"
        ),
        trace=None,
    )


def build_kwise_polytime(
    params: KwiseParams,
    *,
    q: Optional[int] = None,
    phf_eps=None,
    inner_eps=None,
    m: Optional[int] = None,
) -> SampleMultiset:
    """Case-split driver: small n goes to the direct builder; large n
    hashes down to q coordinates with a dense family and composes.

    The error split defaults to eps/4 for the family and eps/4 for the
    inner set (sound for both norms); q defaults to ceil((k/eps)^3) for
    L-infinity and ceil(2^(2^k/k) k^2/eps) for L1.
    """
    n, k, eps, norm = params.n, params.k, params.eps, params.norm
    e_h = Fraction(phf_eps) if phf_eps is not None else eps / 4
    e_r = Fraction(inner_eps) if inner_eps is not None else eps / 4
    if norm == "linf":
        if e_h + e_r > eps:
            raise ParameterError("need phf_eps + inner_eps <= eps")
    else:
        if e_r + 2 * e_h > eps:
            raise ParameterError("need inner_eps + 2*phf_eps <= eps for L1")

    if q is None:
        if norm == "linf":
            q = math.ceil((k / float(eps)) ** 3)
        else:
            q = math.ceil(2 ** (2**k / k) * k * k / float(eps))

    def direct(sub_m=None):
        base = KwiseParams(
            n=n, k=k, eps=eps, norm=norm,
            r=params.r, multiplicative=params.multiplicative,
        )
        if norm == "linf":
            return build_kwise_direct(base, m=sub_m)
        return build_kwise_l1(base, m=sub_m)

    if params.path == "direct":
        return direct(m)

    h_needed = _frac_ceil(Fraction(k * (k - 1), 2) / e_h) if k >= 2 else 0
    can_compose = k >= 2 and h_needed < q < n
    if params.path == "auto":
        r_eff = params.r if params.r is not None else auto_grouping_r(n, k)
        direct_n = (
            2 * math.comb(n, k) * 2**k
            if norm == "linf"
            else 2 ** (2 ** (k - r_eff) + 1) * 2**r_eff * math.comb(n, k)
        )
        from ._util import get_budget

        if not can_compose or direct_n <= get_budget():
            return direct(m)
    elif not can_compose:
        raise ParameterError(
            f"composition needs k >= 2 and h={h_needed} < q={q} < n={n}"
        )

    family, fam_trace = _collision_family(n, q, h_needed)
    inner_params = KwiseParams(n=q, k=k, eps=e_r, norm=norm, r=params.r)
    inner = (
        build_kwise_direct(inner_params, m=m)
        if norm == "linf"
        else build_kwise_l1(inner_params, m=m)
    )
    fam_pd = {"n": n, "q": q, "k": k, "eps": e_h, "h": h_needed}
    fam = SampleMultiset(
        kind="phf",
        alphabet=q,
        n=n,
        words=family,
        params=canonical_params(fam_pd),
        provenance=_provenance("phf", fam_pd, fam_trace),
        trace=fam_trace,
    )
    out = compose(fam, inner)
    pd = {"n": n, "k": k, "eps": eps, "norm": norm, "path": "composed"}
    return SampleMultiset(
        kind="kwise",
        alphabet=2,
        n=n,
        words=out.words,
        params=canonical_params(pd),
        provenance=out.provenance,
        trace=inner.trace,
    )
