"""Command-line front end: scan, analyze, render, evaluate, reprompt, synth.

Commands compose through files or stdin/stdout pipes, and everything except a
live `scan`/`reprompt` runs fully offline. Exit codes: 0 ok, 2 usage, 3 I/O,
4 transport/endpoint, 5 validation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .client import (
    DEFAULT_TAIL_THRESHOLD,
    default_config,
    load_config,
    transcribe,
    transcribe_adaptive,
)
from .errors import (
    CapabilityError,
    DomainError,
    EntromapError,
    ParseError,
    StructuralError,
    TransportError,
    UsageError,
    ValidationError,
)
from .evaluate import (
    AnnotationSet,
    SyntheticSpec,
    generate_synthetic,
    overlap,
    union_annotations,
)
from .pipeline import (
    AnalysisOptions,
    analyze_series,
    analyze_transcript,
    analysis_to_json_bytes,
    parse_analysis,
)
from .entropy import EntropySeries
from .render import DEFAULT_PALETTE, RenderSpec, render
from .reprompt import (
    DEFAULT_CONTEXT_RADIUS,
    apply_corrections,
    reprompt_hotspots,
    results_to_jsonl,
)
from .transcript import read_transcript, transcript_to_jsonl

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_TRANSPORT = 4
EXIT_VALIDATION = 5


def _add_analysis_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--W", type=int, default=10,
        help="sliding-window length (default 10; 5 and 20 are the other common presets)",
    )
    parser.add_argument("--M", type=int, default=3, help="number of windows to report (default 3)")
    parser.add_argument(
        "--strategy", choices=("rank", "percentile"), default="rank",
        help="hotspot selection strategy (default rank)",
    )
    parser.add_argument(
        "--alpha", type=float, default=90.0,
        help="percentile cutoff for --strategy percentile (default 90)",
    )
    parser.add_argument(
        "--suppress-overlap", action=argparse.BooleanOptionalAction, default=True,
        help="greedy non-maximum suppression of overlapping windows (default on)",
    )
    parser.add_argument(
        "--exclude-special", action="store_true",
        help="zero the entropy of layout-marker tokens (line breaks, code fences)",
    )


def _add_endpoint_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file overriding the default request settings")
    parser.add_argument("--model", help="model identifier override")
    parser.add_argument("--k", type=int, default=None, help="top-k alternatives to request (default 5)")
    parser.add_argument("--max-tokens", type=int, default=None, help="response token budget")
    parser.add_argument("--endpoint", help="chat-completions endpoint URL override")
    parser.add_argument(
        "--archive-dir", default="archives",
        help="directory of <hash>.replay.json response archives (default ./archives)",
    )
    parser.add_argument(
        "--live", action="store_true",
        help="allow real endpoint calls when no archive matches (requires the credential env var)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entromap",
        description=(
            "Turn per-token top-k logprobs from a vision-language OCR model into a "
            "sliding-window entropy landscape, flag the highest-entropy windows as "
            "likely error hotspots, render heatmaps, and score hotspot-error overlap."
        ),
        epilog=(
            "defaults: W=10, M=3, k=5, strategy=rank, alpha=90, overlap suppression on; "
            "rank selection reviews at most M*W/n of the tokens"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="OCR a page image into a transcript JSONL (offline replay by default)")
    p.add_argument("image", help="path of the page image")
    p.add_argument("--out", help="transcript output path (default: <image>.transcript.jsonl)")
    p.add_argument("--tex-out", help="decoded document output path (default: <image stem>.tex)")
    p.add_argument(
        "--adaptive", action="store_true",
        help="re-request at larger k while any token's tail mass exceeds the threshold",
    )
    p.add_argument(
        "--tail-threshold", type=float, default=DEFAULT_TAIL_THRESHOLD,
        help="tail-mass threshold for --adaptive (default 0.1)",
    )
    _add_endpoint_flags(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("analyze", help="entropy series + hotspot report from a transcript (or synth output)")
    p.add_argument("input", help="transcript JSONL path, synth JSON path, or - for stdin")
    p.add_argument("--out", default="-", help="analysis JSON output path (default stdout)")
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("render", help="render a heatmap from a transcript and its analysis")
    p.add_argument("input", help="transcript JSONL path")
    p.add_argument("--report", required=True, help="analysis/report JSON path, or - for stdin")
    p.add_argument("--mode", choices=("ansi", "html", "latex"), default="ansi")
    p.add_argument("--out", help="output path (default: stdout for ansi, <input>.heatmap.<ext> otherwise)")
    p.add_argument(
        "--palette", default=",".join(DEFAULT_PALETTE),
        help="comma-separated #rrggbb stops, light to dark",
    )
    p.add_argument("--outline", action=argparse.BooleanOptionalAction, default=True,
                   help="outline hotspot tokens (default on)")
    p.add_argument("--include-scores", action="store_true", help="include hotspot scores")
    p.add_argument("--latex-trust", action="store_true",
                   help="emit wrapper contents raw instead of escaping them")
    p.add_argument("--truecolor", action=argparse.BooleanOptionalAction, default=True,
                   help="24-bit ANSI color (default on; off quantizes to 8 colors)")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("evaluate", help="overlap of annotator-flagged tokens with the hotspots")
    p.add_argument("report", help="analysis/report JSON path, or - for stdin")
    p.add_argument("--annotations", nargs="+", default=[],
                   help="annotation JSON files; multiple annotators are unioned")
    p.add_argument("--truth", help="planted ground-truth annotation JSON, or - when embedded in the report")
    p.add_argument("--out", default="-", help="overlap JSON output path (default stdout)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("reprompt", help="ask the model to re-examine each hotspot snippet")
    p.add_argument("input", help="transcript JSONL path")
    p.add_argument("--report", required=True, help="analysis/report JSON path")
    p.add_argument("--out", default="-", help="results JSONL output path (default stdout)")
    p.add_argument("--context-radius", type=int, default=DEFAULT_CONTEXT_RADIUS,
                   help="context tokens on each side of a hotspot (default 20)")
    p.add_argument("--image", help="page image to re-send (default: the transcript's image reference)")
    p.add_argument("--text-only", action="store_true", help="do not re-send the image")
    p.add_argument("--auto-accept", action="store_true",
                   help="accept well-formed proposals and write a patched transcript alongside")
    _add_endpoint_flags(p)
    p.set_defaults(func=cmd_reprompt)

    p = sub.add_parser("synth", help="synthetic entropy series with planted error spans")
    p.add_argument("--spec", help="synthetic-spec JSON path (overrides the inline flags)")
    p.add_argument("--n", type=int, default=500, help="series length (default 500)")
    p.add_argument("--baseline-mean", type=float, default=0.3, help="baseline bits (default 0.3)")
    p.add_argument("--baseline-sd", type=float, default=0.1, help="baseline noise sd (default 0.1)")
    p.add_argument(
        "--spans", default="100:8:2.0,250:8:2.0,400:8:2.0",
        help="comma-separated start:length:spike_bits triples",
    )
    p.add_argument("--seed", type=int, default=0, help="generator seed (default 0)")
    p.add_argument("--out", default="-", help="output path (default stdout)")
    p.set_defaults(func=cmd_synth)

    return parser


# ---------------------------------------------------------------- helpers


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise UsageError(message)


def _read_input(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _write_output(path: str | None, data: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        Path(path).write_bytes(data)


def _build_config(args: argparse.Namespace):
    overrides = {}
    if args.model:
        overrides["model_id"] = args.model
    if args.k is not None:
        overrides["k"] = args.k
    if args.max_tokens is not None:
        overrides["max_tokens"] = args.max_tokens
    if args.endpoint:
        overrides["endpoint_url"] = args.endpoint
    if args.config:
        return load_config(args.config, **overrides)
    return default_config(**overrides)


def _analysis_options(args: argparse.Namespace) -> AnalysisOptions:
    _require(args.W >= 1, f"--W must be >= 1, got {args.W}")
    _require(args.M >= 1, f"--M must be >= 1, got {args.M}")
    _require(0.0 < args.alpha < 100.0, f"--alpha must lie in (0, 100), got {args.alpha}")
    return AnalysisOptions(
        window_length=args.W,
        top_m=args.M,
        strategy=args.strategy,
        alpha=args.alpha,
        suppress_overlap=args.suppress_overlap,
        exclude_special=args.exclude_special,
    )


def _load_json(data: bytes, what: str) -> dict:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what} is not JSON ({exc.msg})") from exc
    if not isinstance(doc, dict):
        raise StructuralError(f"{what} must be a JSON object")
    return doc


def _series_from_doc(doc: dict) -> EntropySeries:
    entry = doc["series"]
    return EntropySeries(
        values=tuple(entry["values"]),
        tail_masses=tuple(entry["tail_masses"]),
        excluded_special=bool(entry.get("excluded_special", False)),
    )


# ---------------------------------------------------------------- commands


def cmd_scan(args: argparse.Namespace) -> int:
    _require(args.tail_threshold is None or 0.0 < args.tail_threshold < 1.0,
             f"--tail-threshold must lie in (0, 1), got {args.tail_threshold}")
    image_path = Path(args.image)
    if not image_path.is_file():
        print(f"error: image not found: {image_path}", file=sys.stderr)
        return EXIT_IO
    cfg = _build_config(args)
    image = image_path.read_bytes()
    if args.adaptive:
        transcript = transcribe_adaptive(
            image, cfg, args.tail_threshold,
            archive_dir=args.archive_dir, live=args.live, image_ref=str(image_path),
        )
    else:
        transcript = transcribe(
            image, cfg,
            archive_dir=args.archive_dir, live=args.live, image_ref=str(image_path),
        )
    out_path = Path(args.out) if args.out else image_path.with_name(image_path.name + ".transcript.jsonl")
    tex_path = Path(args.tex_out) if args.tex_out else image_path.with_suffix(".tex")
    out_path.write_bytes(transcript_to_jsonl(transcript))
    tex_path.write_text(transcript.text, encoding="utf-8")
    print(f"wrote {out_path} and {tex_path} ({transcript.n} tokens)", file=sys.stderr)
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    options = _analysis_options(args)
    data = _read_input(args.input)
    head = data.lstrip()[:1]
    truth = None
    if head == b"{" and b'"series"' in data.split(b"\n", 1)[0]:
        doc = _load_json(data, "synth document")
        series = _series_from_doc(doc)
        if "truth" in doc:
            truth = AnnotationSet.from_json(doc["truth"])
        report = analyze_series(series, options)
    else:
        transcript = read_transcript(data)
        series, report = analyze_transcript(transcript, options)
    _write_output(args.out, analysis_to_json_bytes(series, report, truth))
    return EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    palette = tuple(stop.strip() for stop in args.palette.split(",") if stop.strip())
    spec = RenderSpec(
        mode=args.mode,
        palette=palette,
        hotspot_outline=args.outline,
        include_scores=args.include_scores,
        ansi_truecolor=args.truecolor,
        latex_trust=args.latex_trust,
    )
    transcript = read_transcript(_read_input(args.input))
    _, report, _ = parse_analysis(_read_input(args.report))
    payload = render(transcript, report, spec)
    if args.out:
        out = args.out
    elif args.mode == "ansi":
        out = "-"
    else:
        extension = {"html": "html", "latex": "tex"}[args.mode]
        _require(args.input != "-", "--out is required when the transcript comes from stdin")
        out = f"{args.input}.heatmap.{extension}"
    _write_output(out, payload)
    if out != "-":
        print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    _require(bool(args.annotations) != bool(args.truth),
             "pass exactly one of --annotations or --truth")
    _, report, embedded_truth = parse_analysis(_read_input(args.report))
    if args.annotations:
        sets = [AnnotationSet.load(path) for path in args.annotations]
        merged = union_annotations(sets)
    elif args.truth == "-":
        if embedded_truth is None:
            raise UsageError("--truth - requires a report document with embedded truth")
        merged = embedded_truth
    else:
        merged = AnnotationSet.load(args.truth)
    result = overlap(report, merged)
    payload = (json.dumps(result.to_json(), ensure_ascii=False, separators=(",", ":")) + "\n").encode()
    _write_output(args.out, payload)
    return EXIT_OK


def cmd_reprompt(args: argparse.Namespace) -> int:
    _require(args.context_radius >= 0,
             f"--context-radius must be >= 0, got {args.context_radius}")
    cfg = _build_config(args)
    transcript = read_transcript(_read_input(args.input))
    _, report, _ = parse_analysis(_read_input(args.report))
    image = None
    if not args.text_only:
        reference = args.image or transcript.source_meta.get("image", "")
        if reference and Path(reference).is_file():
            image = Path(reference).read_bytes()
    results = reprompt_hotspots(
        transcript, report, cfg,
        context_radius=args.context_radius,
        image=image,
        include_image=not args.text_only,
        archive_dir=args.archive_dir,
        live=args.live,
        auto_accept=args.auto_accept,
    )
    _write_output(args.out, results_to_jsonl(results))
    if args.auto_accept:
        patched = apply_corrections(transcript, results, args.context_radius)
        _require(args.input != "-", "--auto-accept needs a file transcript to name the patched copy")
        patched_path = Path(args.input + ".patched.jsonl")
        patched_path.write_bytes(transcript_to_jsonl(patched))
        print(f"wrote {patched_path}", file=sys.stderr)
    return EXIT_OK


def _parse_span_triples(text: str) -> tuple[tuple[int, int, float], ...]:
    spans = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        _require(len(parts) == 3, f"bad span {chunk!r}, expected start:length:spike")
        try:
            spans.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise UsageError(f"bad span {chunk!r}: {exc}") from exc
    return tuple(spans)


def cmd_synth(args: argparse.Namespace) -> int:
    if args.spec:
        spec = SyntheticSpec.from_json(_load_json(_read_input(args.spec), "synthetic spec"))
    else:
        spec = SyntheticSpec(
            n=args.n,
            baseline_mean=args.baseline_mean,
            baseline_noise_sd=args.baseline_sd,
            spans=_parse_span_triples(args.spans),
            seed=args.seed,
        )
    series, truth = generate_synthetic(spec)
    doc = {
        "spec": spec.to_json(),
        "series": {
            "values": list(series.values),
            "tail_masses": list(series.tail_masses),
            "excluded_special": series.excluded_special,
        },
        "truth": truth.to_json(),
    }
    payload = (json.dumps(doc, ensure_ascii=False, separators=(",", ":")) + "\n").encode()
    _write_output(args.out, payload)
    return EXIT_OK


# ---------------------------------------------------------------- entry point


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TransportError, CapabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (ParseError, ValidationError, StructuralError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except EntromapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
