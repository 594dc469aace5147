"""Request/response models for the construction service.

Rational parameters travel as strings ("0.3" or "3/10") so exactness
survives the wire; the handlers parse them with parse_rational.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class BiasRequest(BaseModel):
    n: int = Field(ge=1)
    eps: str
    m: Optional[int] = None
    variant: Literal["slack", "exact"] = "slack"
    include_trace: bool = False


class KwiseRequest(BaseModel):
    n: int = Field(ge=1)
    k: int = Field(ge=1)
    eps: str
    norm: Literal["linf", "l1"] = "linf"
    r: Optional[int] = None
    path: Literal["auto", "direct", "composed"] = "auto"
    multiplicative: bool = False
    q: Optional[int] = None
    phf_eps: Optional[str] = None
    inner_eps: Optional[str] = None
    m: Optional[int] = None
    include_trace: bool = False


class PhfRequest(BaseModel):
    n: int = Field(ge=1)
    q: int = Field(ge=2)
    k: int = Field(ge=1)
    eps: str
    m: Optional[int] = None
    include_trace: bool = False


class CodeRequest(BaseModel):
    q: int = Field(ge=2)
    k: int = Field(ge=1)
    eps: str
    m: Optional[int] = None
    include_trace: bool = False


class TraceSummary(BaseModel):
    method: str
    variant: str
    m: int
    m_out: int
    n_constraints: int
    bits_used: int
    p0_hi: str
    final_hi: str
    slack: str
    certified: bool


class SampleSetResponse(BaseModel):
    kind: str
    alphabet: int
    n: int
    count: int
    params: str
    file_text: str
    sha256: str
    size_bound: Optional[int] = None
    wall_time_s: float
    trace: Optional[TraceSummary] = None
    trace_dump: Optional[str] = None


class VerifyRequest(BaseModel):
    file_text: str
    eps: str
    k: Optional[int] = None
    norm: Literal["linf", "l1", "multiplicative"] = "linf"
    collision_bound: Optional[str] = None


class VerifyResponse(BaseModel):
    property: str
    passed: bool
    max_deviation: str
    threshold: Optional[str] = None
    witness: str
    enumerated: int
    extras: dict[str, str] = {}
    table: str


class ComposeRequest(BaseModel):
    phf_text: str
    inner_text: str


class BoundsResponse(BaseModel):
    n: int
    k: int
    eps: float
    norm: str
    rows: dict[str, float]
    warnings: list[str]
    text: str


class HealthResponse(BaseModel):
    status: str
    version: str
