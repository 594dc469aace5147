"""Command-line front end: a thin client over the service handlers.

Commands run in-process by default; with --server URL the same payloads
are POSTed to a running instance, so files written in either mode are
byte-identical.  Exit codes: 0 success/pass, 1 verification fail,
2 usage/parameter error, 3 precision or internal error.
"""

from __future__ import annotations

import argparse
import shlex
import sys
from pathlib import Path

from . import __version__
from .errors import (
    BudgetError,
    ContractError,
    DerandError,
    DimensionMismatch,
    InfeasibleError,
    ParameterError,
    ParseError,
    PrecisionError,
)

USAGE_EXIT = 2
INTERNAL_EXIT = 3


class _ServerError(Exception):
    def __init__(self, status: int, detail: str):
        super().__init__(detail)
        self.status = status
        self.detail = detail


def _post(server: str, path: str, payload: dict) -> dict:
    import httpx

    r = httpx.post(server.rstrip("/") + path, json=payload, timeout=600.0)
    if r.status_code >= 400:
        try:
            detail = r.json().get("detail", r.text)
        except Exception:
            detail = r.text
        raise _ServerError(r.status_code, detail)
    return r.json()


def _get(server: str, path: str, params: dict) -> dict:
    import httpx

    r = httpx.get(server.rstrip("/") + path, params=params, timeout=60.0)
    if r.status_code >= 400:
        raise _ServerError(r.status_code, r.text)
    return r.json()


def _write_manifest(out_path: Path, resp, command: str, argv: list[str]) -> None:
    lines = [
        f"command={command}",
        f"argv={shlex.join(argv)}",
        f"version={__version__}",
        f"kind={resp.kind}",
        f"params={resp.params}",
        f"size={resp.count}",
        f"bound={resp.size_bound}",
        f"sha256={resp.sha256}",
        f"wall_time_s={resp.wall_time_s:.3f}",
    ]
    out_path.with_suffix(out_path.suffix + ".manifest").write_text(
        "\n".join(lines) + "\n"
    )


def _emit_set(resp, args, argv: list[str]) -> None:
    out = Path(args.out)
    out.write_text(resp.file_text)
    _write_manifest(out, resp, f"construct {args.kind}" if hasattr(args, "kind") else "compose", argv)
    if getattr(args, "trace", None) and resp.trace_dump:
        Path(args.trace).write_text(resp.trace_dump)
    bound = resp.size_bound if resp.size_bound is not None else "-"
    print(f"{resp.kind}: wrote {out} size={resp.count} bound<={bound} sha256={resp.sha256[:16]}")
    if resp.trace is not None:
        print(
            f"trace: m={resp.trace.m} final_potential<={resp.trace.final_hi} "
            f"certified={'yes' if resp.trace.certified else 'NO'}"
        )


def _cmd_construct(args, argv) -> int:
    from .service.app import (
        construct_bias,
        construct_code,
        construct_kwise,
        construct_phf,
    )
    from .service.models import (
        BiasRequest,
        CodeRequest,
        KwiseRequest,
        PhfRequest,
        SampleSetResponse,
    )

    include_trace = bool(args.trace)
    if args.kind == "bias":
        req = BiasRequest(
            n=args.n, eps=args.eps, m=args.m, variant=args.variant,
            include_trace=include_trace,
        )
        path, handler = "/construct/bias", construct_bias
    elif args.kind == "kwise":
        req = KwiseRequest(
            n=args.n, k=args.k, eps=args.eps, norm=args.norm, r=args.r,
            path=args.path, multiplicative=args.multiplicative,
            q=args.q, phf_eps=args.phf_eps, inner_eps=args.inner_eps,
            m=args.m, include_trace=include_trace,
        )
        path, handler = "/construct/kwise", construct_kwise
    elif args.kind == "phf":
        req = PhfRequest(
            n=args.n, q=args.q, k=args.k, eps=args.eps, m=args.m,
            include_trace=include_trace,
        )
        path, handler = "/construct/phf", construct_phf
    else:
        req = CodeRequest(
            q=args.q, k=args.k, eps=args.eps, m=args.m,
            include_trace=include_trace,
        )
        path, handler = "/construct/code", construct_code

    if args.server:
        resp = SampleSetResponse(**_post(args.server, path, req.model_dump()))
    else:
        resp = handler(req)
    _emit_set(resp, args, argv)
    return 0


def _cmd_verify(args, argv) -> int:
    from .service.app import verify_set
    from .service.models import VerifyRequest, VerifyResponse

    text = Path(args.file).read_text()
    req = VerifyRequest(
        file_text=text,
        eps=args.eps,
        k=args.k,
        norm=args.norm,
        collision_bound=args.collision_bound,
    )
    if args.server:
        resp = VerifyResponse(**_post(args.server, f"/verify/{args.kind}", req.model_dump()))
    else:
        resp = verify_set(args.kind, req)
    print(resp.table, end="")
    return 0 if resp.passed else 1


def _cmd_compose(args, argv) -> int:
    from .service.app import compose_sets
    from .service.models import ComposeRequest, SampleSetResponse

    req = ComposeRequest(
        phf_text=Path(args.phf).read_text(),
        inner_text=Path(args.inner).read_text(),
    )
    if args.server:
        resp = SampleSetResponse(**_post(args.server, "/compose", req.model_dump()))
    else:
        resp = compose_sets(req)
    _emit_set(resp, args, argv)
    return 0


def _cmd_bounds(args, argv) -> int:
    from .service.app import bounds_report
    from .service.models import BoundsResponse

    if args.server:
        resp = BoundsResponse(
            **_get(args.server, "/bounds",
                   {"n": args.n, "k": args.k, "eps": args.eps, "norm": args.norm})
        )
    else:
        resp = bounds_report(args.n, args.k, args.eps, args.norm)
    print(resp.text, end="")
    return 0


def _cmd_serve(args, argv) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="derand",
        description="Derandomized constructions of small sample spaces "
        "(bias sets, k-wise independent sets, codes, hash families).",
    )
    parser.add_argument("--version", action="version", version=f"derand {__version__}")
    parser.add_argument(
        "--server",
        default=None,
        help="base URL of a running service; default runs in-process",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="build a sample set and write it to a file")
    csub = c.add_subparsers(dest="kind", required=True)

    def common_out(p):
        p.add_argument("--out", required=True, help="output file path")
        p.add_argument("--trace", default=None, help="also dump the potential trace here")
        p.add_argument("--m", type=int, default=None, help="override the sample size")

    cb = csub.add_parser("bias", help="epsilon-bias set over {0,1}^n")
    cb.add_argument("--n", type=int, required=True)
    cb.add_argument("--eps", required=True)
    cb.add_argument("--variant", choices=("slack", "exact"), default="slack")
    common_out(cb)

    ck = csub.add_parser("kwise", help="eps-almost k-wise independent set")
    ck.add_argument("--n", type=int, required=True)
    ck.add_argument("--k", type=int, required=True)
    ck.add_argument("--eps", required=True)
    ck.add_argument("--norm", choices=("linf", "l1"), default="linf")
    ck.add_argument("--r", type=int, default=None, help="L1 prefix width")
    ck.add_argument("--path", choices=("auto", "direct", "composed"), default="auto")
    ck.add_argument("--multiplicative", action="store_true",
                    help="target (1+-eps)/2^k instead of 1/2^k +- eps")
    ck.add_argument("--q", type=int, default=None, help="composition alphabet")
    ck.add_argument("--phf-eps", dest="phf_eps", default=None)
    ck.add_argument("--inner-eps", dest="inner_eps", default=None)
    common_out(ck)

    cp = csub.add_parser("phf", help="(1-eps)-dense (n,q,k) perfect hash family")
    cp.add_argument("--n", type=int, required=True)
    cp.add_argument("--q", type=int, required=True)
    cp.add_argument("--k", type=int, required=True)
    cp.add_argument("--eps", required=True)
    common_out(cp)

    cc = csub.add_parser("code", help="epsilon-balanced linear code generator rows")
    cc.add_argument("--q", type=int, required=True)
    cc.add_argument("--k", type=int, required=True)
    cc.add_argument("--eps", required=True)
    common_out(cc)

    v = sub.add_parser("verify", help="exact brute-force verification of a file")
    v.add_argument("kind", choices=("bias", "kwise", "phf", "code"))
    v.add_argument("file")
    v.add_argument("--eps", required=True)
    v.add_argument("--k", type=int, default=None)
    v.add_argument("--norm", choices=("linf", "l1", "multiplicative"), default="linf")
    v.add_argument("--collision-bound", dest="collision_bound", default=None)

    m = sub.add_parser("compose", help="compose a hash family with an inner set")
    m.add_argument("phf")
    m.add_argument("inner")
    m.add_argument("--out", required=True)

    b = sub.add_parser("bounds", help="size expressions and lower bounds, for inspection")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--eps", required=True)
    b.add_argument("--norm", choices=("linf", "l1"), default="linf")

    s = sub.add_parser("serve", help="run the HTTP service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)

    return parser


_COMMANDS = {
    "construct": _cmd_construct,
    "verify": _cmd_verify,
    "compose": _cmd_compose,
    "bounds": _cmd_bounds,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args, argv)
    except (ParameterError, ParseError, DimensionMismatch, InfeasibleError, BudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (PrecisionError, ContractError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return INTERNAL_EXIT
    except _ServerError as exc:
        print(f"server error ({exc.status}): {exc.detail}", file=sys.stderr)
        return USAGE_EXIT if exc.status in (413, 422) else INTERNAL_EXIT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except DerandError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return INTERNAL_EXIT


if __name__ == "__main__":
    sys.exit(main())
