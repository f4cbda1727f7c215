#!/usr/bin/env python3
"""Regenerate the committed test fixtures: page images, replay archives,
golden transcript/heatmap files, and annotation sets.

Everything is seeded and timestamps are pinned, so re-running this script
reproduces the committed bytes. Run from the repo root:

    python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import math
import re
import sys
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from entromap.client import (  # noqa: E402
    ReplayArchive,
    build_request_body,
    default_config,
    request_hash,
    transcribe,
)
from entromap.entropy import entropy_series  # noqa: E402
from entromap.hotspots import select_top_m  # noqa: E402
from entromap.render import RenderSpec, render  # noqa: E402
from entromap.reprompt import build_correction_body, snippet_text  # noqa: E402
from entromap.transcript import (  # noqa: E402
    TokenAlternative,
    TokenRecord,
    Transcript,
    transcript_to_jsonl,
)
from entromap.windows import window_means  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures"
ARCHIVES = FIXTURES / "archives"
CAPTURED_AT = "2025-11-20T10:00:00Z"

PAGE_TEXT = (
    "On the Stability of Stochastic Gradient Steps\n"
    "\n"
    "We study the iterates $x_{t+1} = x_t - \\eta g_t$ for a smooth convex "
    "objective $f$ with minibatch gradients. The step size $\\eta$ controls "
    "the trade-off between progress and noise amplification, and the "
    "minibatch gradient is the average\n"
    "$$ g_t = \\frac{1}{m} \\sum_{i=1}^{m} \\nabla f_i(x_t) $$\n"
    "over $m$ sampled component functions. When the noise covariance is "
    "bounded, the expected suboptimality after $T$ steps decays like "
    "$O(1/\\sqrt{T})$ for the averaged iterate.\n"
    "\n"
    "Assuming $L$-smoothness and a step size $\\eta \\le 1/L$, one obtains "
    "the descent inequality\n"
    "$$ \\mathbb{E}[f(x_{t+1})] \\le f(x_t) - \\frac{\\eta}{2} "
    "\\|\\nabla f(x_t)\\|^2 + \\frac{\\eta^2 L \\sigma^2}{2 m} $$\n"
    "which balances the deterministic decrease against the variance term. "
    "Averaging the iterates, or decaying $\\eta$ on a schedule, removes the "
    "residual noise floor in the usual way and recovers the classical rates "
    "for convex problems.\n"
)

BLURRY_TEXT = (
    "Let $f$ be an $L$-smooth function and fix a step size $\\eta > 0$. "
    "Then the iterates remain bounded.\n"
)

# common OCR look-alikes for math tokens; generic mutations cover the rest
CONFUSIONS = {
    "\\eta": ["\\pi", "\\nu", "n", "\\tau", "\\gamma", "\\zeta", "\\xi", "N", "m"],
    "\\nabla": ["\\Delta", "\\triangle", "V", "\\nu", "\\lambda", "\\forall", "v", "Y", "7"],
    "\\frac": ["\\Frac", "\\tfrac", "\\dfrac", "\\prec", "\\text", "\\grac", "frac", "\\f", "\\trac"],
    "\\sum": ["\\Sigma", "\\sun", "\\sim", "\\sup", "\\hsum", "E", "\\varSigma", "Z", "\\zum"],
    "\\sigma": ["\\delta", "o", "\\varsigma", "a", "\\rho", "s", "\\phi", "0", "\\theta"],
    "\\sqrt": ["\\surd", "\\sort", "\\sqnt", "V", "\\root", "v", "\\sgrt", "\\squt", "r"],
    "-": ["~", "_", "=", "—", ".", "·", "‒", "˜", ","],
    "{": ["(", "[", "\\{", "|", "!", "1", "f", "l", "i"],
    "}": [")", "]", "\\}", "|", "1", "I", "j", "]", ","],
    "^": ["ˆ", "'", "°", "*", "∧", "v", "A", "n", "¨"],
    "_": ["-", ".", ",", "‗", "ˍ", ";", ":", "'", "x"],
}


def tokenize(text: str) -> list[str]:
    pattern = r" ?\\[A-Za-z]+| ?[A-Za-z]+| ?[0-9]+|\n| ?[^A-Za-z0-9 \n]| +"
    tokens = re.findall(pattern, text)
    assert "".join(tokens) == text, "tokenizer must cover the text exactly"
    return tokens


def variants(token: str, count: int, rng: np.random.Generator) -> list[str]:
    core = token.lstrip(" ")
    prefix = token[: len(token) - len(core)]
    pool = list(CONFUSIONS.get(core, []))
    generic = [
        core.upper(),
        core[::-1],
        core + ".",
        core + "'",
        "l" + core,
        core.replace("a", "o") if "a" in core else core + ",",
        core + "s",
        "(" + core,
        core + "-",
    ]
    out: list[str] = []
    for candidate in pool + generic:
        alt = prefix + candidate
        if alt != token and alt not in out:
            out.append(alt)
        if len(out) == count:
            return out
    i = 0
    while len(out) < count:
        alt = f"{prefix}{core}{i}"
        if alt != token and alt not in out:
            out.append(alt)
        i += 1
    return out


def confident_probs(rng: np.random.Generator, k: int) -> list[float]:
    top = rng.uniform(0.93, 0.988)
    rest = (1.0 - top) * rng.uniform(0.55, 0.8)
    weights = np.exp(-1.1 * np.arange(k - 1)) if k > 1 else np.array([])
    probs = [top] + list(rest * weights / weights.sum()) if k > 1 else [top]
    return probs


def uncertain_probs(rng: np.random.Generator, k: int) -> list[float]:
    top = rng.uniform(0.28, 0.45)
    explained = rng.uniform(0.91, 0.97)  # keep tails under the 0.1 threshold
    rest = explained - top
    weights = np.exp(-0.55 * np.arange(k - 1))
    return [top] + list(rest * weights / weights.sum())


def response_items(
    tokens: list[str],
    k: int,
    rng: np.random.Generator,
    uncertain_positions: set[int],
    outside_topk_positions: set[int] = frozenset(),
    tail_heavy_positions: dict[int, float] | None = None,
) -> list[dict]:
    items = []
    for position, token in enumerate(tokens, start=1):
        if position in (tail_heavy_positions or {}):
            explained = 1.0 - tail_heavy_positions[position]
            weights = np.exp(-0.4 * np.arange(k))
            probs = list(explained * weights / weights.sum())
        elif position in uncertain_positions:
            probs = uncertain_probs(rng, k)
        else:
            probs = confident_probs(rng, k)
        alt_texts = [token] + variants(token, k - 1, rng)
        if position in outside_topk_positions:
            # the sampled token sits outside the reported top-k; scale the
            # reported mass down so the separate chosen probability fits
            top = [
                {"token": text, "logprob": math.log(p * 0.95)}
                for text, p in zip(variants(token, k, rng), probs)
            ]
            chosen_lp = math.log(0.02)
        else:
            top = [
                {"token": text, "logprob": math.log(p)}
                for text, p in zip(alt_texts, probs)
            ]
            chosen_lp = top[0]["logprob"]
        items.append({"token": token, "logprob": chosen_lp, "top_logprobs": top})
    return items


def chat_response(model: str, items: list[dict], text: str) -> bytes:
    doc = {
        "id": "chatcmpl-fixture",
        "object": "chat.completion",
        "created": 1732100000,
        "model": model,
        "choices": [
            {
                "index": 0,
                "message": {"role": "assistant", "content": text},
                "logprobs": {"content": items},
                "finish_reason": "stop",
            }
        ],
        "usage": {
            "prompt_tokens": 1187,
            "completion_tokens": len(items),
            "total_tokens": 1187 + len(items),
        },
    }
    return json.dumps(doc, ensure_ascii=False).encode("utf-8")


def save_archive(body: dict, payload: bytes) -> None:
    archive = ReplayArchive(
        request_hash=request_hash(body), raw_response=payload, captured_at=CAPTURED_AT
    )
    path = archive.save(ARCHIVES)
    print(f"  archive {path.name}")


def make_image(path: Path, text: str, width: int = 860) -> bytes:
    lines = text.split("\n")
    image = Image.new("L", (width, 28 + 21 * len(lines)), 255)
    draw = ImageDraw.Draw(image)
    y = 14
    for line in lines:
        draw.text((26, y), line, fill=0)
        y += 21
    image.save(path)
    return path.read_bytes()


def find_token(tokens: list[str], core: str) -> int:
    """1-based index of the first token whose text (ignoring a leading space) is `core`."""
    for i, token in enumerate(tokens, start=1):
        if token.lstrip(" ") == core:
            return i
    raise ValueError(f"no token {core!r} in the fixture text")


def span_positions(tokens: list[str], anchor: str, before: int, after: int) -> set[int]:
    index = find_token(tokens, anchor)
    return set(range(max(1, index - before), min(len(tokens), index + after) + 1))


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    ARCHIVES.mkdir(parents=True, exist_ok=True)
    cfg = default_config()

    print("page fixture:")
    page_bytes = make_image(FIXTURES / "page.png", PAGE_TEXT)
    tokens = tokenize(PAGE_TEXT)
    print(f"  {len(tokens)} tokens")
    rng = np.random.default_rng(20251120)
    hot1 = span_positions(tokens, "\\frac", 2, 9)
    hot2 = span_positions(tokens, "\\sigma", 6, 5)
    outside = {find_token(tokens, "\\sqrt")}
    items = response_items(
        tokens, cfg.k, rng,
        uncertain_positions=hot1 | hot2,
        outside_topk_positions=outside,
    )
    body = build_request_body(page_bytes, cfg)
    save_archive(body, chat_response(cfg.model_id, items, PAGE_TEXT))

    golden = transcribe(
        page_bytes, cfg, archive_dir=ARCHIVES, image_ref="tests/fixtures/page.png"
    )
    (FIXTURES / "golden_scan.jsonl").write_bytes(transcript_to_jsonl(golden))
    print(f"  golden_scan.jsonl ({golden.n} tokens)")

    series = entropy_series(golden)
    report = select_top_m(window_means(series, 10), 3, suppress_overlap=True)
    print(f"  hotspots: {[(h.start, h.end, round(h.score, 3)) for h in report.hotspots]}")

    golden_tex = render(golden, report, RenderSpec(mode="latex"))
    (FIXTURES / "golden_heatmap.tex").write_bytes(golden_tex)
    print("  golden_heatmap.tex")

    print("correction archives:")
    replies = [
        json.dumps(
            {
                "corrected_snippet": snippet_text(golden, report.hotspots[0], 20).replace(
                    "\\frac", "\\frac", 1
                )[:-1] + ")",
                "explanation": "The closing delimiter was dropped by the OCR pass.",
            },
            ensure_ascii=False,
        ),
        json.dumps(
            {
                "corrected_snippet": snippet_text(golden, report.hotspots[1], 20),
                "explanation": "The flagged span already matches the page.",
            },
            ensure_ascii=False,
        ),
        "The snippet looks fine to me.",  # deliberately not JSON
    ]
    for hotspot, reply in zip(report.hotspots, replies):
        snippet = snippet_text(golden, hotspot, 20)
        correction_body = build_correction_body(snippet, hotspot, cfg, image=page_bytes)
        response = {
            "id": "chatcmpl-fixture",
            "object": "chat.completion",
            "created": 1732100000,
            "model": cfg.model_id,
            "choices": [
                {
                    "index": 0,
                    "message": {"role": "assistant", "content": reply},
                    "finish_reason": "stop",
                }
            ],
        }
        save_archive(correction_body, json.dumps(response, ensure_ascii=False).encode("utf-8"))

    print("annotations:")
    spans = [list(h.tokens()) for h in report.hotspots]
    annotations = {
        "ann_a.json": {"doc": "page", "annotator": "a", "flagged": sorted(spans[0][2:5] + [3])},
        "ann_b.json": {"doc": "page", "annotator": "b", "flagged": sorted(spans[1][1:3] + spans[0][2:3])},
        "ann_c.json": {"doc": "page", "annotator": "c", "flagged": sorted(spans[2][4:6] + [golden.n - 1])},
    }
    for name, doc in annotations.items():
        (FIXTURES / name).write_text(json.dumps(doc, ensure_ascii=False) + "\n", "utf-8")
        print(f"  {name}: {doc['flagged']}")

    print("blurry fixture (adaptive escalation):")
    blurry_bytes = make_image(FIXTURES / "blurry.png", BLURRY_TEXT, width=700)
    blurry_tokens = tokenize(BLURRY_TEXT)
    heavy = {find_token(blurry_tokens, "\\eta"): 0.3}
    rng5 = np.random.default_rng(7001)
    items5 = response_items(blurry_tokens, 5, rng5, uncertain_positions=set(), tail_heavy_positions=heavy)
    save_archive(
        build_request_body(blurry_bytes, cfg),
        chat_response(cfg.model_id, items5, BLURRY_TEXT),
    )
    rng10 = np.random.default_rng(7002)
    items10 = response_items(blurry_tokens, 10, rng10, uncertain_positions={heavy.popitem()[0]})
    cfg10 = default_config(k=10)
    save_archive(
        build_request_body(blurry_bytes, cfg10),
        chat_response(cfg.model_id, items10, BLURRY_TEXT),
    )

    print("tiny.jsonl:")
    tiny_plan = [
        ("Let", [1.0], False),
        (" x", [0.5, 0.5], False),
        (" =", [0.75, 0.20], False),
        (" 3", [0.6, 0.25, 0.1], False),
        (".", [0.97, 0.02], False),
        ("\n", [0.99], True),
        ("Then", [0.5, 0.25, 0.125, 0.125], False),
        (" y", [0.4, 0.3, 0.2, 0.05], False),
        (" >", [0.9, 0.05, 0.03], False),
        (" 0", [1.0], False),
        (".", [0.95], False),
        ("\n", [0.98, 0.01], True),
    ]
    records = []
    for index, (text, probs, special) in enumerate(tiny_plan, start=1):
        texts = [text] + variants(text, len(probs) - 1, np.random.default_rng(index))
        alternatives = tuple(
            TokenAlternative(t, math.log(p)) for t, p in zip(texts, probs)
        )
        records.append(
            TokenRecord(index=index, chosen_text=text, alternatives=alternatives, is_special=special)
        )
    tiny = Transcript.from_tokens(records, {"model": "fixture", "image": "", "k": "4"})
    (FIXTURES / "tiny.jsonl").write_bytes(transcript_to_jsonl(tiny))
    print(f"  tiny.jsonl ({tiny.n} tokens)")
    print("done.")


if __name__ == "__main__":
    main()
