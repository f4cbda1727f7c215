"""Sliding-window entropy heatmaps for vision-language OCR post-editing.

Turns per-token top-k log-probabilities into a truncated-entropy landscape,
flags the highest-entropy windows as likely error hotspots, renders ANSI/HTML/
LaTeX heatmaps, and scores hotspot-vs-annotation overlap.
"""

from .client import (
    ReplayArchive,
    RequestConfig,
    default_config,
    load_config,
    transcribe,
    transcribe_adaptive,
)
from .entropy import (
    EntropySeries,
    FullDistribution,
    coarse_grain,
    entropy_series,
    full_entropy,
    tail_mass,
    truncated_entropy,
    truncated_entropy_curve,
)
from .errors import (
    CapabilityError,
    DomainError,
    EntromapError,
    ParseError,
    ReplayMissError,
    StructuralError,
    TransportError,
    UsageError,
    ValidationError,
)
from .evaluate import (
    AnnotationSet,
    OverlapResult,
    SyntheticSpec,
    generate_synthetic,
    overlap,
    union_annotations,
)
from .hotspots import Hotspot, HotspotReport, select_percentile, select_top_m, shading
from .pipeline import AnalysisOptions, analyze_series, analyze_transcript, run_pipeline
from .render import DEFAULT_PALETTE, RenderSpec, palette_color, render, strip_ansi
from .reprompt import RepromptResult, apply_corrections, reprompt_hotspots, snippet_text
from .transcript import (
    TokenAlternative,
    TokenRecord,
    Transcript,
    is_special_text,
    read_transcript,
    transcript_to_jsonl,
    write_transcript,
)
from .windows import WindowSeries, window_means, window_means_naive

__version__ = "0.1.0"

__all__ = [
    "AnalysisOptions",
    "AnnotationSet",
    "CapabilityError",
    "DEFAULT_PALETTE",
    "DomainError",
    "EntromapError",
    "EntropySeries",
    "FullDistribution",
    "Hotspot",
    "HotspotReport",
    "OverlapResult",
    "ParseError",
    "RenderSpec",
    "ReplayArchive",
    "ReplayMissError",
    "RepromptResult",
    "RequestConfig",
    "StructuralError",
    "SyntheticSpec",
    "TokenAlternative",
    "TokenRecord",
    "Transcript",
    "TransportError",
    "UsageError",
    "ValidationError",
    "WindowSeries",
    "analyze_series",
    "analyze_transcript",
    "apply_corrections",
    "coarse_grain",
    "default_config",
    "entropy_series",
    "full_entropy",
    "generate_synthetic",
    "is_special_text",
    "load_config",
    "overlap",
    "palette_color",
    "read_transcript",
    "render",
    "reprompt_hotspots",
    "run_pipeline",
    "select_percentile",
    "select_top_m",
    "shading",
    "snippet_text",
    "strip_ansi",
    "tail_mass",
    "transcribe",
    "transcribe_adaptive",
    "transcript_to_jsonl",
    "truncated_entropy",
    "truncated_entropy_curve",
    "union_annotations",
    "window_means",
    "window_means_naive",
    "write_transcript",
]
