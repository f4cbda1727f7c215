"""Optional correction loop: ask the model to re-examine flagged spans.

Each hotspot's snippet (with surrounding context tokens) goes back to the
endpoint, by default together with the page image, and the model is asked for
a corrected snippet plus a short explanation. Results never touch the input
transcript; applying accepted proposals is a separate pure function that
replaces each span wholesale and returns a new transcript.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .client import RequestConfig, fetch_response
from .errors import DomainError, StructuralError
from .hotspots import Hotspot, HotspotReport
from .transcript import TokenAlternative, TokenRecord, Transcript

DEFAULT_CONTEXT_RADIUS = 20

CORRECTION_SYSTEM_PROMPT = (
    "You are reviewing a possibly faulty OCR transcription of a scanned page. "
    "You will be shown a snippet that an uncertainty detector flagged. "
    "Re-examine it and reply with a single JSON object: "
    '{"corrected_snippet": "<the snippet, fixed or unchanged>", '
    '"explanation": "<one or two sentences>"}. Reply with JSON only.'
)

CORRECTION_USER_TEMPLATE = (
    "The transcription snippet between the markers below was flagged as "
    "uncertain (tokens {start}-{end} of the document). Check it for OCR "
    "mistakes such as dropped symbols, wrong Greek letters, or unbalanced "
    "braces, and return the corrected snippet.\n"
    "<<<SNIPPET\n{snippet}\nSNIPPET>>>"
)


@dataclass(frozen=True)
class RepromptResult:
    """The model's proposal for one flagged span."""

    hotspot: Hotspot
    original_snippet: str
    proposed_snippet: str
    accepted: bool
    rationale_text: str

    def to_json(self) -> dict:
        return {
            "hotspot": {
                "start": self.hotspot.start,
                "end": self.hotspot.end,
                "score": self.hotspot.score,
            },
            "original_snippet": self.original_snippet,
            "proposed_snippet": self.proposed_snippet,
            "accepted": self.accepted,
            "rationale_text": self.rationale_text,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "RepromptResult":
        spot = doc["hotspot"]
        return cls(
            hotspot=Hotspot(int(spot["start"]), int(spot["end"]), float(spot["score"])),
            original_snippet=str(doc["original_snippet"]),
            proposed_snippet=str(doc["proposed_snippet"]),
            accepted=bool(doc["accepted"]),
            rationale_text=str(doc["rationale_text"]),
        )


def snippet_span(transcript: Transcript, hotspot: Hotspot, context_radius: int) -> tuple[int, int]:
    """The hotspot span widened by the context radius, clipped to [1, n]."""
    if context_radius < 0:
        raise DomainError(f"context radius must be >= 0, got {context_radius}")
    start = max(1, hotspot.start - context_radius)
    end = min(transcript.n, hotspot.end + context_radius)
    return start, end


def snippet_text(transcript: Transcript, hotspot: Hotspot, context_radius: int) -> str:
    """Concatenated token texts of the widened span."""
    start, end = snippet_span(transcript, hotspot, context_radius)
    return "".join(token.chosen_text for token in transcript.tokens[start - 1 : end])


def build_correction_body(
    snippet: str,
    hotspot: Hotspot,
    cfg: RequestConfig,
    image: bytes | None = None,
) -> dict:
    """Chat request asking the model to re-examine one snippet (image optional)."""
    user_text = CORRECTION_USER_TEMPLATE.format(
        snippet=snippet, start=hotspot.start, end=hotspot.end
    )
    if image is None:
        user_content: object = user_text
    else:
        from .client import _image_mime  # shared sniffing, not part of the client API
        import base64

        encoded = base64.b64encode(image).decode("ascii")
        user_content = [
            {"type": "text", "text": user_text},
            {
                "type": "image_url",
                "image_url": {"url": f"data:{_image_mime(image)};base64,{encoded}"},
            },
        ]
    return {
        "model": cfg.model_id,
        "messages": [
            {"role": "system", "content": CORRECTION_SYSTEM_PROMPT},
            {"role": "user", "content": user_content},
        ],
        "max_tokens": cfg.max_tokens,
    }


def _parse_correction(raw_response: bytes) -> tuple[str, str, bool]:
    """Returns (proposed_snippet, rationale, well_formed)."""
    try:
        doc = json.loads(raw_response)
        content = doc["choices"][0]["message"]["content"]
    except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
        return "", f"malformed model reply: no message content ({exc})", False
    if not isinstance(content, str) or not content.strip():
        return "", "malformed model reply: empty message content", False
    try:
        parsed = json.loads(content)
        corrected = parsed["corrected_snippet"]
        if not isinstance(corrected, str):
            raise TypeError("corrected_snippet is not a string")
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        return (
            "",
            f"malformed model reply: expected JSON with 'corrected_snippet' ({exc})",
            False,
        )
    return corrected, str(parsed.get("explanation", "")), True


def reprompt_hotspots(
    transcript: Transcript,
    report: HotspotReport,
    cfg: RequestConfig,
    context_radius: int = DEFAULT_CONTEXT_RADIUS,
    *,
    image: bytes | None = None,
    include_image: bool = True,
    archive_dir: str | Path = "archives",
    live: bool = False,
    auto_accept: bool = False,
    timeout: float = 120.0,
) -> list[RepromptResult]:
    """One correction proposal per hotspot, in score order.

    The input transcript is never modified; ``accepted`` is False unless
    ``auto_accept`` is set and the reply was well-formed. A malformed reply
    yields a result with a diagnostic ``rationale_text``.
    """
    if len(report.shading) != transcript.n:
        raise StructuralError("report does not belong to this transcript")
    results: list[RepromptResult] = []
    for hotspot in report.hotspots:
        snippet = snippet_text(transcript, hotspot, context_radius)
        body = build_correction_body(
            snippet, hotspot, cfg, image=image if include_image else None
        )
        archive = fetch_response(body, cfg, archive_dir, live=live, timeout=timeout)
        proposed, rationale, well_formed = _parse_correction(archive.raw_response)
        if not well_formed:
            proposed = snippet
        results.append(
            RepromptResult(
                hotspot=hotspot,
                original_snippet=snippet,
                proposed_snippet=proposed,
                accepted=bool(auto_accept and well_formed),
                rationale_text=rationale,
            )
        )
    return results


def apply_corrections(
    transcript: Transcript,
    results: Sequence[RepromptResult],
    context_radius: int = DEFAULT_CONTEXT_RADIUS,
) -> Transcript:
    """A patched copy with each accepted snippet span replaced wholesale.

    Replies are free-form text, so each replaced span becomes one synthetic
    token carrying the proposed snippet with probability 1. Overlapping
    accepted spans are applied best-score first; later overlapping ones are
    skipped. The original transcript is untouched.
    """
    chosen: list[tuple[int, int, str]] = []
    for result in results:
        if not result.accepted:
            continue
        start, end = snippet_span(transcript, result.hotspot, context_radius)
        if any(not (end < s or start > e) for s, e, _ in chosen):
            continue
        chosen.append((start, end, result.proposed_snippet))
    if not chosen:
        return transcript
    chosen.sort(reverse=True)
    tokens: list[TokenRecord] = list(transcript.tokens)
    for start, end, proposed in chosen:
        patch = TokenRecord(
            index=1,
            chosen_text=proposed,
            alternatives=(TokenAlternative(proposed, 0.0),),
        )
        tokens[start - 1 : end] = [patch]
    reindexed = [
        TokenRecord(
            index=position,
            chosen_text=token.chosen_text,
            alternatives=token.alternatives,
            is_special=token.is_special,
        )
        for position, token in enumerate(tokens, start=1)
    ]
    meta = dict(transcript.source_meta)
    meta["patched"] = "true"
    return Transcript.from_tokens(reindexed, meta)


def results_to_jsonl(results: Iterable[RepromptResult]) -> bytes:
    """One JSON object per line, in input order."""
    lines = [
        json.dumps(result.to_json(), ensure_ascii=False, separators=(",", ":"))
        for result in results
    ]
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""
