"""Adapter for chat-completions-style vision endpoints, with replay archives.

Requests set ``logprobs: true`` and ``top_logprobs: k`` and carry the page
image as a base64 data URL. Every raw response is archived under a hash of
the request body (credentials never enter the body or the archive), so any
transcription can be reproduced offline, byte for byte, from the committed
archive. Offline replay is the default; live calls are opt-in.
"""

from __future__ import annotations

import base64
import datetime
import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Iterable

import requests

from .entropy import tail_mass
from .errors import (
    CapabilityError,
    DomainError,
    ReplayMissError,
    TransportError,
    UsageError,
    ValidationError,
)
from .transcript import (
    DEFAULT_SPECIAL_PATTERNS,
    TokenAlternative,
    TokenRecord,
    Transcript,
    is_special_text,
)

K_MAX = 20
ESCALATION_STEP = 5
MAX_ESCALATIONS = 3
DEFAULT_TAIL_THRESHOLD = 0.1
#: Positive logprobs up to this slack are float noise from the endpoint; clamp to 0.
POSITIVE_LOGPROB_SLACK = 1e-6


@dataclass(frozen=True)
class RequestConfig:
    """Everything one transcription request needs, minus the credential itself.

    ``auth_token_env`` names the environment variable holding the bearer
    token, so the credential never appears in configs, archives, or logs.
    """

    model_id: str
    k: int
    prompt_system: str
    prompt_user: str
    max_tokens: int
    endpoint_url: str
    auth_token_env: str

    def __post_init__(self):
        if not 1 <= self.k <= K_MAX:
            raise ValidationError(f"k must lie in [1, {K_MAX}], got {self.k}")
        if not self.prompt_system or not self.prompt_user:
            raise ValidationError("prompts must be non-empty")
        if self.max_tokens < 1:
            raise ValidationError(f"max_tokens must be >= 1, got {self.max_tokens}")


def default_config(**overrides) -> RequestConfig:
    """The packaged default request settings, with keyword overrides applied."""
    text = resources.files("entromap").joinpath("data/default_request.json").read_text("utf-8")
    doc = json.loads(text)
    doc.update(overrides)
    return RequestConfig(**doc)


def load_config(path: str | Path, **overrides) -> RequestConfig:
    """Request settings from a user JSON file; missing keys fall back to the defaults."""
    doc = json.loads(Path(path).read_text("utf-8"))
    doc.update(overrides)
    return default_config(**doc)


@dataclass(frozen=True)
class ReplayArchive:
    """One captured raw endpoint response, keyed by its request hash."""

    request_hash: str
    raw_response: bytes
    captured_at: str

    @property
    def filename(self) -> str:
        return f"{self.request_hash}.replay.json"

    def save(self, directory: str | Path) -> Path:
        """Atomic write (temp file + rename) of ``<hash>.replay.json``."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        target = directory / self.filename
        payload = json.dumps(
            {
                "request_hash": self.request_hash,
                "captured_at": self.captured_at,
                "response": self.raw_response.decode("utf-8"),
            },
            ensure_ascii=False,
            indent=2,
        )
        fd, temp_name = tempfile.mkstemp(dir=directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(payload)
            os.replace(temp_name, target)
        except BaseException:
            if os.path.exists(temp_name):
                os.unlink(temp_name)
            raise
        return target

    @classmethod
    def load(cls, path: str | Path) -> "ReplayArchive":
        doc = json.loads(Path(path).read_text("utf-8"))
        return cls(
            request_hash=str(doc["request_hash"]),
            raw_response=str(doc["response"]).encode("utf-8"),
            captured_at=str(doc["captured_at"]),
        )


def _image_mime(image: bytes) -> str:
    if image.startswith(b"\x89PNG"):
        return "image/png"
    if image.startswith(b"\xff\xd8"):
        return "image/jpeg"
    if image[:4] == b"RIFF" and image[8:12] == b"WEBP":
        return "image/webp"
    return "application/octet-stream"


def build_request_body(image: bytes, cfg: RequestConfig) -> dict:
    """The JSON body sent to the endpoint; contains no credentials."""
    if not image:
        raise DomainError("image payload is empty")
    encoded = base64.b64encode(image).decode("ascii")
    return {
        "model": cfg.model_id,
        "messages": [
            {"role": "system", "content": cfg.prompt_system},
            {
                "role": "user",
                "content": [
                    {"type": "text", "text": cfg.prompt_user},
                    {
                        "type": "image_url",
                        "image_url": {"url": f"data:{_image_mime(image)};base64,{encoded}"},
                    },
                ],
            },
        ],
        "max_tokens": cfg.max_tokens,
        "logprobs": True,
        "top_logprobs": cfg.k,
    }


def request_hash(body: dict) -> str:
    """Deterministic sha256 over the canonical JSON encoding of the body."""
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _now_iso() -> str:
    return datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def fetch_response(
    body: dict,
    cfg: RequestConfig,
    archive_dir: str | Path,
    live: bool = False,
    timeout: float = 120.0,
) -> ReplayArchive:
    """Replay an archived response for this request, or (live mode) call the
    endpoint, archive the response, and return it.

    Retries transient HTTP statuses with exponential backoff, three tries.
    """
    digest = request_hash(body)
    path = Path(archive_dir) / f"{digest}.replay.json"
    if path.is_file():
        return ReplayArchive.load(path)
    if not live:
        raise ReplayMissError(
            f"no archived response {digest[:12]}… under {archive_dir}; "
            "pass live mode to call the endpoint"
        )
    token = os.environ.get(cfg.auth_token_env, "")
    if not token:
        raise UsageError(
            f"credential environment variable {cfg.auth_token_env} is not set"
        )
    headers = {"Authorization": f"Bearer {token}", "Content-Type": "application/json"}
    delay = 0.5
    response = None
    try:
        for attempt in range(3):
            response = requests.post(cfg.endpoint_url, json=body, headers=headers, timeout=timeout)
            if response.status_code in (429, 500, 502, 503, 504) and attempt < 2:
                time.sleep(delay)
                delay *= 2
                continue
            break
    except requests.RequestException as exc:
        raise TransportError(f"request to {cfg.endpoint_url} failed: {exc}") from exc
    if response.status_code >= 400:
        raise TransportError(
            f"endpoint returned HTTP {response.status_code}: {response.text[:300]}",
            status=response.status_code,
        )
    archive = ReplayArchive(
        request_hash=digest, raw_response=response.content, captured_at=_now_iso()
    )
    archive.save(archive_dir)
    return archive


def parse_response(
    raw_response: bytes,
    cfg: RequestConfig,
    image_ref: str = "",
    special_patterns: Iterable[str] = DEFAULT_SPECIAL_PATTERNS,
    extra_meta: dict[str, str] | None = None,
) -> Transcript:
    """Turn a raw chat-completion response into a Transcript.

    Raises :class:`CapabilityError` when the response carries no token
    logprobs, i.e. the model or request configuration does not expose them.
    """
    try:
        doc = json.loads(raw_response)
    except json.JSONDecodeError as exc:
        raise TransportError(f"endpoint response is not JSON: {exc.msg}") from exc
    choices = doc.get("choices") or []
    if not choices:
        raise CapabilityError("endpoint response has no choices")
    choice = choices[0]
    content_items = (choice.get("logprobs") or {}).get("content")
    if not content_items:
        raise CapabilityError(
            "response carries no token logprobs; this model or request "
            "configuration does not expose them (request logprobs with top_logprobs)"
        )
    patterns = tuple(special_patterns)
    records: list[TokenRecord] = []
    for position, item in enumerate(content_items, start=1):
        chosen = str(item["token"])
        chosen_lp = _clamp_logprob(item["logprob"], position)
        pairs = [
            (str(alt["token"]), _clamp_logprob(alt["logprob"], position))
            for alt in item.get("top_logprobs") or []
        ]
        if chosen not in {text for text, _ in pairs}:
            pairs.append((chosen, chosen_lp))
        pairs.sort(key=lambda pair: -pair[1])
        records.append(
            TokenRecord(
                index=position,
                chosen_text=chosen,
                alternatives=tuple(TokenAlternative(t, lp) for t, lp in pairs),
                is_special=is_special_text(chosen, patterns),
            )
        )
    meta = {
        "model": cfg.model_id,
        "k": str(cfg.k),
        "image": image_ref,
        "endpoint": cfg.endpoint_url,
    }
    message_content = (choice.get("message") or {}).get("content")
    joined = "".join(record.chosen_text for record in records)
    if isinstance(message_content, str) and message_content != joined:
        meta["content_mismatch"] = "true"
    meta.update(extra_meta or {})
    return Transcript.from_tokens(records, meta)


def _clamp_logprob(value, position: int) -> float:
    lp = float(value)
    if lp > POSITIVE_LOGPROB_SLACK:
        raise ValidationError(f"token {position}: logprob {lp!r} > 0")
    return min(lp, 0.0)


def transcribe(
    image: bytes,
    cfg: RequestConfig,
    *,
    archive_dir: str | Path = "archives",
    live: bool = False,
    image_ref: str = "",
    special_patterns: Iterable[str] = DEFAULT_SPECIAL_PATTERNS,
    timeout: float = 120.0,
    extra_meta: dict[str, str] | None = None,
) -> Transcript:
    """OCR one page image into a Transcript carrying the endpoint's top-k.

    Given an archive, this is a pure function of (image, cfg): repeated runs
    replay the stored response and yield identical transcripts.
    """
    body = build_request_body(image, cfg)
    archive = fetch_response(body, cfg, archive_dir, live=live, timeout=timeout)
    meta = {"request_hash": archive.request_hash}
    meta.update(extra_meta or {})
    return transcript_from_archive(
        archive, cfg, image_ref=image_ref, special_patterns=special_patterns, extra_meta=meta
    )


def transcript_from_archive(
    archive: ReplayArchive,
    cfg: RequestConfig,
    image_ref: str = "",
    special_patterns: Iterable[str] = DEFAULT_SPECIAL_PATTERNS,
    extra_meta: dict[str, str] | None = None,
) -> Transcript:
    """Parse an already-fetched archive into a Transcript."""
    return parse_response(
        archive.raw_response,
        cfg,
        image_ref=image_ref,
        special_patterns=special_patterns,
        extra_meta=extra_meta,
    )


def transcribe_adaptive(
    image: bytes,
    cfg: RequestConfig,
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
    *,
    archive_dir: str | Path = "archives",
    live: bool = False,
    image_ref: str = "",
    special_patterns: Iterable[str] = DEFAULT_SPECIAL_PATTERNS,
    timeout: float = 120.0,
) -> Transcript:
    """Re-issue the whole request at a larger k while any token's tail mass
    exceeds the threshold.

    k grows by +5 per escalation up to 20, at most three escalations; every
    attempt is archived. Exhausting the escalations is not an error: the last
    transcript is returned with a ``tail_warning`` marker in its source_meta.
    """
    if not 0.0 < tail_threshold < 1.0:
        raise DomainError(f"tail threshold must lie in (0, 1), got {tail_threshold}")
    attempt_cfg = cfg
    transcript = transcribe(
        image,
        attempt_cfg,
        archive_dir=archive_dir,
        live=live,
        image_ref=image_ref,
        special_patterns=special_patterns,
        timeout=timeout,
    )
    for _ in range(MAX_ESCALATIONS):
        worst = max(tail_mass(record) for record in transcript.tokens)
        if worst <= tail_threshold or attempt_cfg.k >= K_MAX:
            break
        attempt_cfg = replace(attempt_cfg, k=min(attempt_cfg.k + ESCALATION_STEP, K_MAX))
        transcript = transcribe(
            image,
            attempt_cfg,
            archive_dir=archive_dir,
            live=live,
            image_ref=image_ref,
            special_patterns=special_patterns,
            timeout=timeout,
        )
    worst = max(tail_mass(record) for record in transcript.tokens)
    if worst > tail_threshold:
        meta = dict(transcript.source_meta)
        meta["tail_warning"] = (
            f"max tail mass {worst:.4f} still exceeds {tail_threshold} at k={attempt_cfg.k}"
        )
        transcript = replace(transcript, source_meta=meta)
    return transcript
