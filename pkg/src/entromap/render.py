"""Heatmap renderers: ANSI terminal output, self-contained HTML, LaTeX overlay.

Every renderer preserves the transcript byte-for-byte: stripping the markup
from any output reproduces the token texts exactly. Token backgrounds
interpolate linearly along the palette by shade; tokens inside hotspots can
additionally be outlined/underlined.
"""

from __future__ import annotations

import base64
import html
import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import StructuralError, ValidationError
from .hotspots import HotspotReport
from .transcript import Transcript

#: Sequential palette, lightest to darkest: white -> yellow -> red.
DEFAULT_PALETTE: tuple[str, ...] = ("#ffffff", "#ffcc00", "#cc0000")

_HEX_STOP = re.compile(r"#[0-9a-fA-F]{6}")

#: Characters rewritten inside highlight wrappers in safe LaTeX mode.
LATEX_ESCAPES: dict[str, str] = {
    "\\": r"\textbackslash{}",
    "{": r"\{",
    "}": r"\}",
    "%": r"\%",
    "$": r"\$",
    "#": r"\#",
    "_": r"\_",
    "^": r"\textasciicircum{}",
    "&": r"\&",
    "~": r"\textasciitilde{}",
}

ANSI_RESET = "\x1b[0m"
_ANSI_BASIC_BG = {
    (0, 0, 0): 40,
    (205, 0, 0): 41,
    (0, 205, 0): 42,
    (205, 205, 0): 43,
    (0, 0, 238): 44,
    (205, 0, 205): 45,
    (0, 205, 205): 46,
    (229, 229, 229): 47,
}


@dataclass(frozen=True)
class RenderSpec:
    """How to draw a heatmap: output mode, palette stops, and decorations."""

    mode: str = "ansi"
    palette: tuple[str, ...] = DEFAULT_PALETTE
    hotspot_outline: bool = True
    include_scores: bool = False
    ansi_truecolor: bool = True
    latex_trust: bool = False

    def __post_init__(self):
        if self.mode not in ("ansi", "html", "latex"):
            raise ValidationError(f"unknown render mode {self.mode!r}")
        stops = tuple(self.palette)
        object.__setattr__(self, "palette", stops)
        if len(stops) < 2:
            raise ValidationError("palette needs at least two color stops")
        for stop in stops:
            if not _HEX_STOP.fullmatch(stop):
                raise ValidationError(f"bad palette stop {stop!r}, expected #rrggbb")


def _rgb(stop: str) -> tuple[int, int, int]:
    return int(stop[1:3], 16), int(stop[3:5], 16), int(stop[5:7], 16)


def palette_color(palette: tuple[str, ...], shade: float) -> tuple[int, int, int]:
    """Linear interpolation along the palette; shade 0 is the first stop, 1 the last."""
    position = shade * (len(palette) - 1)
    left = min(int(position), len(palette) - 2)
    frac = position - left
    a = _rgb(palette[left])
    b = _rgb(palette[left + 1])
    return tuple(round(a[c] + (b[c] - a[c]) * frac) for c in range(3))


def render(transcript: Transcript, report: HotspotReport, spec: RenderSpec) -> bytes:
    """Render one heatmap as bytes in the mode named by ``spec``."""
    if len(report.shading) != transcript.n:
        raise StructuralError(
            f"shading covers {len(report.shading)} tokens but the transcript has {transcript.n}"
        )
    if spec.mode == "ansi":
        return render_ansi(transcript, report, spec)
    if spec.mode == "html":
        return render_html(transcript, report, spec)
    return render_latex(transcript, report, spec)


# ---------------------------------------------------------------- ANSI


def _ansi_background(spec: RenderSpec, shade: float) -> str:
    if spec.ansi_truecolor:
        r, g, b = palette_color(spec.palette, shade)
        return f"\x1b[48;2;{r};{g};{b}m"
    # quantize to the nearest palette stop, then to the nearest basic color
    stop = _rgb(spec.palette[round(shade * (len(spec.palette) - 1))])
    code = min(
        _ANSI_BASIC_BG,
        key=lambda rgb: sum((rgb[c] - stop[c]) ** 2 for c in range(3)),
    )
    return f"\x1b[{_ANSI_BASIC_BG[code]}m"


def render_ansi(transcript: Transcript, report: HotspotReport, spec: RenderSpec) -> bytes:
    """Colored terminal output; zero-shade tokens stay plain, so an all-zero
    shading yields the bare transcript plus a final reset. Scores are not
    representable in this mode and ``include_scores`` is ignored."""
    flagged = report.flagged_tokens() if spec.hotspot_outline else set()
    parts: list[str] = []
    for record, shade in zip(transcript.tokens, report.shading):
        if shade > 0.0:
            prefix = _ansi_background(spec, shade)
            if record.index in flagged:
                prefix += "\x1b[4m"
            parts.append(f"{prefix}{record.chosen_text}{ANSI_RESET}")
        else:
            parts.append(record.chosen_text)
    parts.append(ANSI_RESET)
    return "".join(parts).encode("utf-8")


def strip_ansi(data: bytes) -> bytes:
    """Remove every ANSI escape sequence, leaving the raw text."""
    return re.sub(rb"\x1b\[[0-9;]*m", b"", data)


# ---------------------------------------------------------------- HTML

_HTML_STYLE = """
body { font-family: -apple-system, "Segoe UI", Helvetica, Arial, sans-serif;
       margin: 0; padding: 20px; background: #f7f8fa; color: #20242a; }
header { padding-bottom: 12px; border-bottom: 1px solid #dde1e8; }
h1 { font-size: 19px; margin: 0 0 4px 0; }
.meta { font-size: 12px; color: #5a6270; }
.panels { display: grid; grid-template-columns: repeat(auto-fit, minmax(320px, 1fr));
          gap: 16px; margin-top: 16px; }
.panel { background: #fff; border: 1px solid #dde1e8; border-radius: 8px;
         padding: 12px; overflow: auto; }
.panel h2 { font-size: 13px; margin: 0 0 8px 0; color: #39404c; }
.panel img { max-width: 100%; }
.noimg { color: #8a93a3; font-size: 13px; font-style: italic; }
.transcript { font-family: "SFMono-Regular", Consolas, Menlo, monospace;
              font-size: 13px; line-height: 1.9; white-space: pre-wrap;
              word-break: break-word; }
.tok { border-radius: 2px; }
.tok.hot { outline: 1.5px solid #b3261e; outline-offset: 0; }
.scores { margin-top: 16px; border-collapse: collapse; font-size: 12px; }
.scores th, .scores td { border: 1px solid #dde1e8; padding: 4px 10px; text-align: right; }
"""


def _embedded_image(transcript: Transcript) -> str:
    reference = transcript.source_meta.get("image", "")
    path = Path(reference) if reference else None
    if path is None or not path.is_file():
        return '<div class="noimg">(no source image available)</div>'
    payload = path.read_bytes()
    suffix = path.suffix.lower().lstrip(".") or "png"
    mime = {"jpg": "jpeg"}.get(suffix, suffix)
    encoded = base64.b64encode(payload).decode("ascii")
    return (
        f'<img alt="source page" src="data:image/{mime};base64,{encoded}"/>'
    )


def render_html(transcript: Transcript, report: HotspotReport, spec: RenderSpec) -> bytes:
    """One self-contained HTML file: source image and shaded transcript side by
    side, hotspot scores, and the report embedded as machine-readable JSON."""
    flagged = report.flagged_tokens()
    spans: list[str] = []
    for record, shade in zip(transcript.tokens, report.shading):
        r, g, b = palette_color(spec.palette, shade)
        classes = "tok hot" if (spec.hotspot_outline and record.index in flagged) else "tok"
        title = html.escape(f"i={record.index} shade={shade:.3f}", quote=True)
        spans.append(
            f'<span class="{classes}" data-i="{record.index}" title="{title}" '
            f'style="background-color:rgb({r},{g},{b})">{html.escape(record.chosen_text)}</span>'
        )
    scores_block = ""
    if spec.include_scores:
        rows = "".join(
            f"<tr><td>{i + 1}</td><td>{h.start}</td><td>{h.end}</td>"
            f"<td>{h.score:.4f}</td></tr>"
            for i, h in enumerate(report.hotspots)
        )
        scores_block = (
            '<table class="scores"><tr><th>#</th><th>start</th><th>end</th>'
            f"<th>score (bits)</th></tr>{rows}</table>"
        )
    meta = transcript.source_meta
    meta_bits = " &middot; ".join(
        html.escape(f"{key}: {meta[key]}") for key in ("model", "image", "k") if key in meta
    )
    strategy = report.strategy + (
        f" M={report.top_m}" if report.top_m is not None else f" alpha={report.alpha}"
    )
    report_json = json.dumps(report.to_json(), ensure_ascii=False).replace("</", "<\\/")
    document = f"""<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8"/>
<title>entropy heatmap</title>
<style>{_HTML_STYLE}</style>
</head>
<body>
<header>
<h1>Entropy heatmap</h1>
<div class="meta">{meta_bits} &middot; W={report.window_length} &middot; strategy: {html.escape(strategy)} &middot; review budget: {report.budget_fraction:.1%}</div>
</header>
<main class="panels">
<section class="panel"><h2>Source image</h2>{_embedded_image(transcript)}</section>
<section class="panel"><h2>Transcript</h2><div class="transcript" id="transcript">{"".join(spans)}</div></section>
</main>
{scores_block}
<script type="application/json" id="hotspot-report">{report_json}</script>
</body>
</html>
"""
    return document.encode("utf-8")


# ---------------------------------------------------------------- LaTeX


def latex_escape(text: str) -> str:
    """Rewrite the highlight-unsafe characters so a wrapper argument compiles."""
    return "".join(LATEX_ESCAPES.get(ch, ch) for ch in text)


def render_latex(transcript: Transcript, report: HotspotReport, spec: RenderSpec) -> bytes:
    """LaTeX overlay: hotspot tokens wrapped in ``\\entrohl{<shade>}{<token>}``.

    The shade argument is a 0-100 percentage mixed toward the darkest palette
    stop; the macro ships in the preamble. The body outside wrappers is the
    transcript verbatim (it is presumed LaTeX already); wrapper contents are
    escaped in safe mode and left raw when ``spec.latex_trust`` is set.
    """
    flagged = report.flagged_tokens()
    peak = spec.palette[-1][1:].upper()
    lines = [
        "% entropy heatmap overlay",
        "% inside \\entrohl wrappers (safe mode) these characters are rewritten:",
        "%   \\ { } % $ # _ ^ & ~",
        "\\documentclass{article}",
        "\\usepackage[T1]{fontenc}",
        "\\usepackage{xcolor}",
        f"\\definecolor{{entrohlpeak}}{{HTML}}{{{peak}}}",
        "% \\entrohl{<shade>}{<token>}: shade is the 0-100 mix toward entrohlpeak",
        "\\newcommand{\\entrohl}[2]{\\begingroup\\setlength{\\fboxsep}{0pt}"
        "\\colorbox{entrohlpeak!#1!white}{#2}\\endgroup}",
    ]
    if spec.include_scores:
        for i, h in enumerate(report.hotspots):
            lines.append(f"% hotspot {i + 1}: tokens {h.start}-{h.end} score={h.score:.4f}")
    lines.append("\\begin{document}")
    body: list[str] = []
    for record, shade in zip(transcript.tokens, report.shading):
        if record.index in flagged:
            content = record.chosen_text if spec.latex_trust else latex_escape(record.chosen_text)
            body.append(f"\\entrohl{{{shade * 100:.1f}}}{{{content}}}")
        else:
            body.append(record.chosen_text)
    lines.append("".join(body))
    lines.append("\\end{document}")
    return ("\n".join(lines) + "\n").encode("utf-8")
