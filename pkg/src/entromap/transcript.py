"""Transcript data model and the JSONL interchange format.

A transcript file is UTF-8, LF-terminated JSONL: one header line holding the
source metadata, then one object per token::

    {"meta": {"model": "...", "image": "...", "k": 5}}
    {"i": 1, "text": "x", "alts": [["x", -0.01], ["y", -4.2]], "special": false}

``alts`` pairs are ``[token_text, logprob]`` with natural-log probabilities in
non-increasing order, exactly as chat endpoints return them (conversion to
bits happens in :mod:`entromap.entropy`). ``special`` defaults to false and is
omitted on write when false. The header is recognised by its ``meta`` key and
may be absent in hand-written fixtures.

All types are frozen; share them freely across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .errors import ParseError, StructuralError, ValidationError

#: Token texts treated as layout markers rather than page content.
DEFAULT_SPECIAL_PATTERNS: tuple[str, ...] = ("\n", "```")

#: Slack allowed on the total probability mass of one record (float rounding).
MASS_TOLERANCE = 1e-6


@dataclass(frozen=True)
class TokenAlternative:
    """One candidate token with its natural-log probability."""

    token_text: str
    logprob: float

    def __post_init__(self):
        object.__setattr__(self, "logprob", float(self.logprob))
        if not math.isfinite(self.logprob) or self.logprob > 0.0:
            raise ValidationError(
                f"logprob must be finite and <= 0, got {self.logprob!r} "
                f"for token {self.token_text!r}"
            )

    @property
    def probability(self) -> float:
        return math.exp(self.logprob)


@dataclass(frozen=True)
class TokenRecord:
    """One decoded token plus the top-k alternatives the endpoint exposed.

    ``alternatives`` always includes the chosen token: when an endpoint
    samples outside its reported top-k, the response parser appends the chosen
    token with its own logprob, so the tail mass is never double-counted.
    """

    index: int
    chosen_text: str
    alternatives: tuple[TokenAlternative, ...]
    is_special: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alternatives", tuple(self.alternatives))
        if self.index < 1:
            raise StructuralError(f"token index must be >= 1, got {self.index}")
        if not self.alternatives:
            raise ValidationError(f"token {self.index} has no alternatives")
        logprobs = [alt.logprob for alt in self.alternatives]
        if any(a < b for a, b in zip(logprobs, logprobs[1:])):
            raise ValidationError(
                f"token {self.index}: alternatives must be sorted non-increasing by logprob"
            )
        mass = math.fsum(math.exp(lp) for lp in logprobs)
        if mass > 1.0 + MASS_TOLERANCE:
            raise ValidationError(
                f"token {self.index}: alternative probabilities sum to {mass:.8f} > 1"
            )

    @property
    def k(self) -> int:
        """Number of alternatives carried by this record."""
        return len(self.alternatives)


@dataclass(frozen=True)
class Transcript:
    """Ordered token records plus the decoded text and request metadata.

    Invariants: indices run 1..n contiguously, n >= 1, and ``text`` equals the
    concatenation of the token texts (the JSONL format stores only tokens, so
    the round-trip identity forces this).
    """

    tokens: tuple[TokenRecord, ...]
    text: str
    source_meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise StructuralError("a transcript needs at least one token")
        for position, token in enumerate(self.tokens, start=1):
            if token.index != position:
                raise StructuralError(
                    f"token indices must run 1..n contiguously; "
                    f"position {position} holds index {token.index}"
                )
        joined = "".join(token.chosen_text for token in self.tokens)
        if self.text != joined:
            raise ValidationError(
                "transcript text must equal the concatenation of token texts"
            )

    @classmethod
    def from_tokens(
        cls, tokens: Iterable[TokenRecord], source_meta: dict[str, str] | None = None
    ) -> "Transcript":
        """Build a transcript, deriving ``text`` from the token texts."""
        records = tuple(tokens)
        return cls(
            tokens=records,
            text="".join(record.chosen_text for record in records),
            source_meta=dict(source_meta or {}),
        )

    @property
    def n(self) -> int:
        return len(self.tokens)


def is_special_text(
    text: str, patterns: Iterable[str] = DEFAULT_SPECIAL_PATTERNS
) -> bool:
    """Whether a token text is a layout marker (line break, code fence, ...).

    Pure-whitespace tokens containing a newline count as line breaks; other
    patterns match the token text or its stripped form exactly.
    """
    patterns = tuple(patterns)
    if text in patterns:
        return True
    stripped = text.strip()
    if stripped == "" and "\n" in text:
        return True
    return stripped in patterns


def _iter_lines(stream) -> Iterator[tuple[int, str]]:
    if isinstance(stream, (bytes, bytearray)):
        text = bytes(stream).decode("utf-8")
    elif isinstance(stream, str):
        text = stream
    else:
        raw = stream.read()
        text = raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw
    for number, line in enumerate(text.split("\n"), start=1):
        if line.strip():
            yield number, line


def _record_from_json(obj: dict, number: int) -> TokenRecord:
    for key in ("i", "text", "alts"):
        if key not in obj:
            raise ParseError(f"token record is missing {key!r}", line=number)
    alts = obj["alts"]
    if not isinstance(alts, list) or not alts:
        raise ParseError("'alts' must be a non-empty list", line=number)
    try:
        alternatives = tuple(
            TokenAlternative(str(text), float(logprob)) for text, logprob in alts
        )
        return TokenRecord(
            index=int(obj["i"]),
            chosen_text=str(obj["text"]),
            alternatives=alternatives,
            is_special=bool(obj.get("special", False)),
        )
    except ValidationError as exc:
        raise ValidationError(f"line {number}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad token record: {exc}", line=number) from exc


def read_transcript(stream: IO[bytes] | bytes | str) -> Transcript:
    """Parse a JSONL transcript from a byte stream, bytes, or text.

    Raises :class:`ParseError` naming the line for undecodable lines,
    :class:`StructuralError` for non-contiguous indices or an empty file, and
    :class:`ValidationError` for invariant violations such as a positive
    logprob.
    """
    meta: dict[str, str] = {}
    records: list[TokenRecord] = []
    for number, line in _iter_lines(stream):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", line=number) from exc
        if not isinstance(obj, dict):
            raise ParseError("expected a JSON object", line=number)
        if "meta" in obj:
            if records or meta:
                raise StructuralError(
                    f"line {number}: the header must be the single first line"
                )
            header = obj["meta"]
            if not isinstance(header, dict):
                raise ParseError("'meta' must be an object", line=number)
            meta = {str(key): str(value) for key, value in header.items()}
            continue
        records.append(_record_from_json(obj, number))
    if not records:
        raise StructuralError("transcript contains no token records")
    return Transcript.from_tokens(records, meta)


def _meta_to_json(meta: dict[str, str]) -> dict:
    out: dict[str, object] = {}
    for key in sorted(meta):
        value = meta[key]
        if key == "k":
            try:
                out[key] = int(value)
                continue
            except ValueError:
                pass
        out[key] = value
    return out


def transcript_to_jsonl(transcript: Transcript) -> bytes:
    """Serialize to canonical JSONL bytes; identical transcripts give identical bytes."""
    lines = [
        json.dumps(
            {"meta": _meta_to_json(transcript.source_meta)},
            ensure_ascii=False,
            separators=(",", ":"),
        )
    ]
    for token in transcript.tokens:
        entry: dict[str, object] = {
            "i": token.index,
            "text": token.chosen_text,
            "alts": [[alt.token_text, alt.logprob] for alt in token.alternatives],
        }
        if token.is_special:
            entry["special"] = True
        lines.append(json.dumps(entry, ensure_ascii=False, separators=(",", ":")))
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_transcript(transcript: Transcript, stream: IO[bytes]) -> None:
    """Write the canonical JSONL form; sink failures propagate unchanged."""
    stream.write(transcript_to_jsonl(transcript))
