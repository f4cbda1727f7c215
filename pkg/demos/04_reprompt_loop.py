#!/usr/bin/env python3
"""The optional correction loop: send each hotspot back for a second look.

Each flagged span, padded with context tokens, goes back to the endpoint
together with the page image; the model answers with a corrected snippet and
a short rationale. Replies here come from committed replay archives, so the
demo runs offline and deterministically. Nothing touches the original
transcript unless proposals are explicitly accepted.

Run from the repo root: python3 demos/04_reprompt_loop.py
"""

from pathlib import Path

from entromap import (
    apply_corrections,
    default_config,
    entropy_series,
    reprompt_hotspots,
    select_top_m,
    transcribe,
    window_means,
)

ROOT = Path(__file__).resolve().parent.parent
ARCHIVES = ROOT / "tests/fixtures/archives"

cfg = default_config()
page = (ROOT / "tests/fixtures/page.png").read_bytes()
transcript = transcribe(page, cfg, archive_dir=ARCHIVES, image_ref="tests/fixtures/page.png")
report = select_top_m(window_means(entropy_series(transcript), 10), 3)

print(f"{len(report.hotspots)} hotspots; asking for corrections (context radius 20)")
print()
results = reprompt_hotspots(
    transcript, report, cfg,
    context_radius=20, image=page, archive_dir=ARCHIVES, auto_accept=True,
)
for i, result in enumerate(results, start=1):
    changed = result.proposed_snippet != result.original_snippet
    print(f"--- hotspot {i}: tokens {result.hotspot.start}-{result.hotspot.end} "
          f"(score {result.hotspot.score:.3f}) ---")
    print(f"accepted: {result.accepted}   proposal differs: {changed}")
    if result.rationale_text:
        print(f"rationale: {result.rationale_text}")
    if changed:
        print(f"original: ...{result.original_snippet[-60:]!r}")
        print(f"proposed: ...{result.proposed_snippet[-60:]!r}")
    print()

patched = apply_corrections(transcript, results, context_radius=20)
if patched is transcript:
    print("no accepted proposals; transcript unchanged")
else:
    print(f"patched transcript: {transcript.n} tokens -> {patched.n} "
          f"(accepted spans replaced wholesale)")
    print("the original transcript object is untouched; patching returns a copy")
