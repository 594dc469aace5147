"""FastAPI service wrapping the builders and verifiers.

Each route delegates to a plain handler function taking and returning
pydantic models; the CLI calls the same handlers in-process, so the wire
format and the local path cannot drift apart.
"""

from __future__ import annotations

import io
import math
import time

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..algebra import LinearCode
from ..constructions import (
    KwiseParams,
    PhfParams,
    build_balanced_code,
    build_bias_set,
    build_kwise_direct,
    build_kwise_l1,
    build_kwise_polytime,
    build_phf,
    compose,
)
from ..errors import (
    BudgetError,
    ContractError,
    DerandError,
    DimensionMismatch,
    InfeasibleError,
    ParameterError,
    ParseError,
    PrecisionError,
)
from ..sampleset import SampleMultiset, canonical_params, parse_rational
from ..verifier import (
    check_bias,
    check_code_balance,
    check_kwise,
    check_phf_density,
    check_trace,
    lower_bound_report,
)
from .models import (
    BiasRequest,
    BoundsResponse,
    CodeRequest,
    ComposeRequest,
    HealthResponse,
    KwiseRequest,
    PhfRequest,
    SampleSetResponse,
    TraceSummary,
    VerifyRequest,
    VerifyResponse,
)

VERIFY_KINDS = ("bias", "kwise", "phf", "code")


def _trace_summary(trace) -> TraceSummary | None:
    if trace is None:
        return None
    return TraceSummary(
        method=trace.method,
        variant=trace.variant,
        m=trace.m,
        m_out=trace.m_out,
        n_constraints=trace.n_constraints,
        bits_used=trace.bits_used,
        p0_hi=f"{float(trace.p0_hi):.12g}",
        final_hi=f"{float(trace.final_potential.hi):.12g}",
        slack=f"{trace.slack_step.numerator}/{trace.slack_step.denominator}",
        certified=check_trace(trace).passed,
    )


def _trace_dump(trace) -> str | None:
    if trace is None:
        return None
    buf = io.StringIO()
    trace.dump(buf)
    return buf.getvalue()


def _set_response(
    ms: SampleMultiset, started: float, include_trace: bool
) -> SampleSetResponse:
    trace = ms.trace
    bound = trace.m + 1 if trace is not None else ms.size
    return SampleSetResponse(
        kind=ms.kind,
        alphabet=ms.alphabet,
        n=ms.n,
        count=ms.size,
        params=ms.params_string(),
        file_text=ms.to_text(),
        sha256=ms.sha256,
        size_bound=bound,
        wall_time_s=time.monotonic() - started,
        trace=_trace_summary(trace),
        trace_dump=_trace_dump(trace) if include_trace else None,
    )


def construct_bias(req: BiasRequest) -> SampleSetResponse:
    started = time.monotonic()
    ms = build_bias_set(req.n, parse_rational(req.eps), m=req.m, variant=req.variant)
    return _set_response(ms, started, req.include_trace)


def construct_kwise(req: KwiseRequest) -> SampleSetResponse:
    started = time.monotonic()
    params = KwiseParams(
        n=req.n,
        k=req.k,
        eps=parse_rational(req.eps),
        norm=req.norm,
        r=req.r,
        path=req.path,
        multiplicative=req.multiplicative,
    )
    needs_driver = (
        req.path != "direct" or req.q is not None or req.phf_eps is not None
    )
    if needs_driver:
        ms = build_kwise_polytime(
            params,
            q=req.q,
            phf_eps=parse_rational(req.phf_eps) if req.phf_eps else None,
            inner_eps=parse_rational(req.inner_eps) if req.inner_eps else None,
            m=req.m,
        )
    elif req.norm == "linf":
        ms = build_kwise_direct(params, m=req.m)
    else:
        ms = build_kwise_l1(params, m=req.m)
    return _set_response(ms, started, req.include_trace)


def construct_phf(req: PhfRequest) -> SampleSetResponse:
    started = time.monotonic()
    params = PhfParams(n=req.n, q=req.q, k=req.k, eps=parse_rational(req.eps))
    ms = build_phf(params, m=req.m)
    return _set_response(ms, started, req.include_trace)


def construct_code(req: CodeRequest) -> SampleSetResponse:
    started = time.monotonic()
    eps = parse_rational(req.eps)
    code = build_balanced_code(req.q, req.k, eps, m=req.m)
    ms = SampleMultiset(
        kind="code",
        alphabet=req.q,
        n=req.k,
        words=code.rows,
        params=canonical_params({"q": req.q, "k": req.k, "eps": eps}),
        provenance=f"code(q={req.q},k={req.k},eps={eps}) "
        f"trace={code.trace.digest()[:16]}",
        trace=code.trace,
    )
    return _set_response(ms, started, req.include_trace)


def _report_response(rep) -> VerifyResponse:
    from ..sampleset import format_rational

    return VerifyResponse(
        property=rep.prop,
        passed=rep.passed,
        max_deviation=format_rational(rep.max_deviation),
        threshold=format_rational(rep.threshold) if rep.threshold is not None else None,
        witness=rep.witness,
        enumerated=rep.enumerated,
        extras={k: str(v) for k, v in rep.extras.items()},
        table=rep.render_table(),
    )


def verify_set(kind: str, req: VerifyRequest) -> VerifyResponse:
    if kind not in VERIFY_KINDS:
        raise ParameterError(f"unknown verify kind {kind!r}; expected {VERIFY_KINDS}")
    ms = SampleMultiset.from_text(req.file_text)
    eps = parse_rational(req.eps)
    if kind == "bias":
        rep = check_bias(ms, eps)
    elif kind == "kwise":
        if req.k is None:
            raise ParameterError("kwise verification needs k")
        rep = check_kwise(ms, req.k, eps, req.norm)
    elif kind == "phf":
        if req.k is None:
            raise ParameterError("phf verification needs k")
        bound = parse_rational(req.collision_bound) if req.collision_bound else None
        rep = check_phf_density(ms, req.k, eps, collision_bound=bound)
    else:
        code = LinearCode(q=ms.alphabet, k=ms.n, rows=ms.words)
        rep = check_code_balance(code, eps)
    return _report_response(rep)


def compose_sets(req: ComposeRequest) -> SampleSetResponse:
    started = time.monotonic()
    fam = SampleMultiset.from_text(req.phf_text)
    inner = SampleMultiset.from_text(req.inner_text)
    out = compose(fam, inner)
    return _set_response(out, started, include_trace=False)


def bounds_report(n: int, k: int, eps: str, norm: str = "linf") -> BoundsResponse:
    rep = lower_bound_report(n, k, parse_rational(eps), norm)
    return BoundsResponse(
        n=rep.n,
        k=rep.k,
        eps=rep.eps,
        norm=rep.norm,
        rows={k2: (v if not math.isnan(v) else float("nan")) for k2, v in rep.rows.items()},
        warnings=rep.warnings,
        text=rep.render_text(),
    )


app = FastAPI(
    title="derand",
    version=__version__,
    description="Greedy derandomized constructions with exact verification",
)


@app.exception_handler(DerandError)
async def derand_error_handler(request: Request, exc: DerandError):
    if isinstance(exc, (ParameterError, ParseError, DimensionMismatch, InfeasibleError)):
        status = 422
    elif isinstance(exc, BudgetError):
        status = 413
    elif isinstance(exc, (PrecisionError, ContractError)):
        status = 500
    else:
        status = 500
    return JSONResponse(
        status_code=status,
        content={"detail": str(exc), "error": type(exc).__name__},
    )


@app.get("/healthz", response_model=HealthResponse)
def healthz():
    return HealthResponse(status="ok", version=__version__)


@app.post("/construct/bias", response_model=SampleSetResponse)
def construct_bias_route(req: BiasRequest):
    return construct_bias(req)


@app.post("/construct/kwise", response_model=SampleSetResponse)
def construct_kwise_route(req: KwiseRequest):
    return construct_kwise(req)


@app.post("/construct/phf", response_model=SampleSetResponse)
def construct_phf_route(req: PhfRequest):
    return construct_phf(req)


@app.post("/construct/code", response_model=SampleSetResponse)
def construct_code_route(req: CodeRequest):
    return construct_code(req)


@app.post("/verify/{kind}", response_model=VerifyResponse)
def verify_route(kind: str, req: VerifyRequest):
    return verify_set(kind, req)


@app.post("/compose", response_model=SampleSetResponse)
def compose_route(req: ComposeRequest):
    return compose_sets(req)


@app.get("/bounds", response_model=BoundsResponse)
def bounds_route(n: int, k: int, eps: str, norm: str = "linf"):
    return bounds_report(n, k, eps, norm)
