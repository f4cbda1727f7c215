"""Single-call orchestration and the shared analysis-document serializer.

The staged CLI commands (scan, analyze, render) and :func:`run_pipeline` use
the same serializers, so running the stages separately produces byte-for-byte
the same artifacts as the single call.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .client import RequestConfig, transcribe, transcribe_adaptive
from .entropy import EntropySeries, entropy_series
from .errors import ParseError, StructuralError
from .evaluate import AnnotationSet
from .hotspots import HotspotReport, select_percentile, select_top_m
from .render import RenderSpec, render
from .transcript import Transcript, transcript_to_jsonl
from .windows import window_means

DEFAULT_WINDOW = 10
DEFAULT_TOP_M = 3
DEFAULT_ALPHA = 90.0


@dataclass(frozen=True)
class AnalysisOptions:
    """Knobs shared by `analyze` and the single-shot pipeline."""

    window_length: int = DEFAULT_WINDOW
    top_m: int = DEFAULT_TOP_M
    strategy: str = "rank"
    alpha: float = DEFAULT_ALPHA
    suppress_overlap: bool = True
    exclude_special: bool = False


def analyze_series(series: EntropySeries, options: AnalysisOptions) -> HotspotReport:
    """Window the series and select hotspots per the configured strategy."""
    windows = window_means(series, options.window_length)
    if options.strategy == "rank":
        return select_top_m(windows, options.top_m, options.suppress_overlap)
    return select_percentile(windows, options.alpha)


def analyze_transcript(
    transcript: Transcript, options: AnalysisOptions
) -> tuple[EntropySeries, HotspotReport]:
    series = entropy_series(transcript, exclude_special=options.exclude_special)
    return series, analyze_series(series, options)


def analysis_to_json_bytes(
    series: EntropySeries,
    report: HotspotReport,
    truth: AnnotationSet | None = None,
) -> bytes:
    """Canonical analysis document: entropy series + hotspot report (+ ground truth)."""
    doc: dict[str, object] = {
        "entropy": {
            "values": list(series.values),
            "tail_masses": list(series.tail_masses),
            "excluded_special": series.excluded_special,
        },
        "report": report.to_json(),
    }
    if truth is not None:
        doc["truth"] = truth.to_json()
    return (json.dumps(doc, ensure_ascii=False, separators=(",", ":")) + "\n").encode("utf-8")


def parse_analysis(
    data: bytes | str,
) -> tuple[EntropySeries | None, HotspotReport, AnnotationSet | None]:
    """Read an analysis document, or a bare hotspot-report JSON object."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"analysis document is not JSON ({exc.msg})") from exc
    if not isinstance(doc, dict):
        raise StructuralError("analysis document must be a JSON object")
    if "report" in doc:
        report = HotspotReport.from_json(doc["report"])
        series = None
        if "entropy" in doc:
            entry = doc["entropy"]
            series = EntropySeries(
                values=tuple(entry["values"]),
                tail_masses=tuple(entry["tail_masses"]),
                excluded_special=bool(entry.get("excluded_special", False)),
            )
        truth = AnnotationSet.from_json(doc["truth"]) if "truth" in doc else None
        return series, report, truth
    return None, HotspotReport.from_json(doc), None


def run_pipeline(
    image_path: str | Path,
    cfg: RequestConfig,
    *,
    options: AnalysisOptions = AnalysisOptions(),
    render_spec: RenderSpec = RenderSpec(mode="html"),
    archive_dir: str | Path = "archives",
    live: bool = False,
    adaptive: bool = False,
    tail_threshold: float = 0.1,
) -> dict[str, bytes]:
    """Image to heatmap in one call; returns the staged artifacts as bytes.

    Keys: ``transcript`` (JSONL), ``analysis`` (JSON), ``heatmap`` (mode-
    dependent), ``document`` (the bare transcript text, for saving next to the
    image).
    """
    image_path = Path(image_path)
    image = image_path.read_bytes()
    ocr = transcribe_adaptive if adaptive else transcribe
    kwargs = {"tail_threshold": tail_threshold} if adaptive else {}
    transcript = ocr(
        image,
        cfg,
        archive_dir=archive_dir,
        live=live,
        image_ref=str(image_path),
        **kwargs,
    )
    series, report = analyze_transcript(transcript, options)
    return {
        "transcript": transcript_to_jsonl(transcript),
        "analysis": analysis_to_json_bytes(series, report),
        "heatmap": render(transcript, report, render_spec),
        "document": transcript.text.encode("utf-8"),
    }
