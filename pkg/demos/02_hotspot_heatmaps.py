#!/usr/bin/env python3
"""From page image to reviewable heatmaps, fully offline.

Replays the committed endpoint response for the fixture page, slides the
entropy window over the transcript, picks the top-3 hotspot regions, and
writes all three heatmap renderings into demos/output/. The ANSI heatmap is
also printed straight to the terminal.

Run from the repo root: python3 demos/02_hotspot_heatmaps.py
"""

import sys
from pathlib import Path

from entromap import (
    RenderSpec,
    default_config,
    entropy_series,
    render,
    select_top_m,
    transcribe,
    window_means,
)

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "demos" / "output"
OUT.mkdir(exist_ok=True)

print("=== 1. Replay the archived endpoint response ===")
cfg = default_config()
transcript = transcribe(
    (ROOT / "tests/fixtures/page.png").read_bytes(),
    cfg,
    archive_dir=ROOT / "tests/fixtures/archives",
    image_ref="tests/fixtures/page.png",
)
print(f"model={transcript.source_meta['model']} k={transcript.source_meta['k']} "
      f"tokens={transcript.n}")
print()

print("=== 2. Window the entropy landscape and pick hotspots ===")
series = entropy_series(transcript)
windows = window_means(series, 10)
report = select_top_m(windows, 3, suppress_overlap=True)
print(f"{'rank':>4} {'tokens':>9} {'mean bits':>10}  flagged text")
for rank, hotspot in enumerate(report.hotspots, start=1):
    snippet = "".join(
        t.chosen_text for t in transcript.tokens[hotspot.start - 1 : hotspot.end]
    ).replace("\n", "\\n")
    print(f"{rank:>4} {f'{hotspot.start}-{hotspot.end}':>9} {hotspot.score:>10.3f}  {snippet!r}")
print(f"review budget: {report.budget_fraction:.1%} of the tokens")
print()

print("=== 3. Render ===")
for mode, name in (("html", "page.heatmap.html"), ("latex", "page.heatmap.tex")):
    payload = render(transcript, report, RenderSpec(mode=mode, include_scores=True))
    (OUT / name).write_bytes(payload)
    print(f"wrote demos/output/{name} ({len(payload)} bytes)")
print()

print("ANSI heatmap (shaded backgrounds mark model uncertainty):")
print()
sys.stdout.flush()
ansi = render(transcript, report, RenderSpec(mode="ansi"))
sys.stdout.buffer.write(ansi)
sys.stdout.buffer.flush()
print()
