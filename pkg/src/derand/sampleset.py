"""SampleMultiset: the universal output type, and its text format.

Format (one file per set):

    # derand v1 kind=<kind> alphabet=<a> n=<n> count=<c> params=<canonical>
    # provenance <free text>            (optional)
    <one word per line>

Binary words are rendered as runs of 0/1 characters; q-ary words as
space-separated decimal symbols.  Golden files diff cleanly and parse
trivially from any language.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Iterable, Optional

from .errors import DimensionMismatch, ParameterError, ParseError

FORMAT_MAGIC = "derand v1"

_HEADER_RE = re.compile(
    r"^# derand v1 kind=(?P<kind>\S+) alphabet=(?P<alphabet>\d+) "
    r"n=(?P<n>\d+) count=(?P<count>\d+) params=(?P<params>\S*)$"
)


def format_rational(x) -> str:
    f = Fraction(x)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def parse_rational(text: str) -> Fraction:
    """Accepts '3/10', '0.3', or '3'; exact in all cases."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ParameterError(f"cannot parse rational {text!r}") from exc


def canonical_params(params: dict) -> tuple[tuple[str, str], ...]:
    out = []
    for key in sorted(params):
        val = params[key]
        if isinstance(val, (Fraction, int)) and not isinstance(val, bool):
            sval = format_rational(val)
        else:
            sval = str(val)
        if not re.fullmatch(r"[A-Za-z0-9_./-]+", sval) or "," in sval:
            raise ParameterError(f"param {key}={sval!r} not representable in header")
        out.append((key, sval))
    return tuple(out)


@dataclass(frozen=True)
class SampleMultiset:
    """Ordered multiset of fixed-length words over {0..alphabet-1}."""

    kind: str
    alphabet: int
    n: int
    words: tuple[tuple[int, ...], ...]
    params: tuple[tuple[str, str], ...] = ()
    provenance: str = ""
    trace: object = dc_field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.alphabet < 2:
            raise ParameterError(f"alphabet must be >= 2, got {self.alphabet}")
        if self.n < 1:
            raise ParameterError(f"word length must be >= 1, got {self.n}")
        if not re.fullmatch(r"[A-Za-z0-9_-]+", self.kind):
            raise ParameterError(f"bad kind token {self.kind!r}")
        words = tuple(tuple(w) for w in self.words)
        object.__setattr__(self, "words", words)
        if not words:
            raise ParameterError("a sample multiset cannot be empty")
        for w in words:
            if len(w) != self.n:
                raise DimensionMismatch(f"word of length {len(w)}, expected {self.n}")
            for s in w:
                if not 0 <= s < self.alphabet:
                    raise ParameterError(f"symbol {s} outside alphabet {self.alphabet}")

    @property
    def size(self) -> int:
        return len(self.words)

    def param(self, key: str) -> Optional[str]:
        for k, v in self.params:
            if k == key:
                return v
        return None

    def params_string(self) -> str:
        return ",".join(f"{k}={v}" for k, v in self.params)

    def header(self) -> str:
        return (
            f"# {FORMAT_MAGIC} kind={self.kind} alphabet={self.alphabet} "
            f"n={self.n} count={self.size} params={self.params_string()}"
        )

    def word_line(self, w: tuple[int, ...]) -> str:
        if self.alphabet == 2:
            return "".join("01"[b] for b in w)
        return " ".join(str(s) for s in w)

    def to_text(self) -> str:
        lines = [self.header()]
        if self.provenance:
            lines.append(f"# provenance {self.provenance}")
        lines.extend(self.word_line(w) for w in self.words)
        return "\n".join(lines) + "\n"

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    @classmethod
    def from_text(cls, text: str) -> "SampleMultiset":
        lines = text.splitlines()
        if not lines:
            raise ParseError("empty file")
        m = _HEADER_RE.match(lines[0])
        if not m:
            raise ParseError(f"bad header line: {lines[0]!r}")
        kind = m.group("kind")
        alphabet = int(m.group("alphabet"))
        n = int(m.group("n"))
        count = int(m.group("count"))
        params_str = m.group("params")
        params: tuple[tuple[str, str], ...] = ()
        if params_str:
            pairs = []
            for item in params_str.split(","):
                if "=" not in item:
                    raise ParseError(f"bad params entry {item!r}")
                k, v = item.split("=", 1)
                pairs.append((k, v))
            params = tuple(pairs)
        provenance = ""
        words = []
        for line in lines[1:]:
            if not line.strip():
                continue
            if line.startswith("#"):
                if line.startswith("# provenance "):
                    provenance = line[len("# provenance "):]
                continue
            if alphabet == 2 and " " not in line:
                try:
                    word = tuple(int(ch) for ch in line.strip())
                except ValueError as exc:
                    raise ParseError(f"bad word line {line!r}") from exc
            else:
                try:
                    word = tuple(int(tok) for tok in line.split())
                except ValueError as exc:
                    raise ParseError(f"bad word line {line!r}") from exc
            words.append(word)
        if len(words) != count:
            raise ParseError(f"header count {count} != {len(words)} word lines")
        try:
            return cls(
                kind=kind, alphabet=alphabet, n=n,
                words=tuple(words), params=params, provenance=provenance,
            )
        except (ParameterError, DimensionMismatch) as exc:
            raise ParseError(str(exc)) from exc


def words_as_masks(ms: SampleMultiset) -> list[int]:
    """Binary words as bitmask ints, LSB = coordinate 0."""
    if ms.alphabet != 2:
        raise ParameterError("bitmask view requires a binary alphabet")
    return [sum(b << i for i, b in enumerate(w)) for w in ms.words]
