"""Independent reference implementations the tests check the library against.

Everything here recomputes results by a different route than the library:
high-precision arithmetic via mpmath, brute-force enumeration, and markup
strippers written against the documented output formats.
"""

from __future__ import annotations

import math
import re
from html.parser import HTMLParser

from mpmath import mp, mpf

mp.dps = 50


def entropy_bits_mp(probabilities) -> float:
    """Shannon entropy in bits at 50 decimal digits, then rounded to float."""
    total = mpf(0)
    for p in probabilities:
        p = mpf(repr(float(p)))
        if p > 0:
            total -= p * mp.log(p, 2)
    return float(total)


def truncated_entropy_mp(probabilities) -> tuple[float, float]:
    """Top-k+tail entropy of explicit probabilities, tail = 1 - sum, in bits."""
    probs = [mpf(repr(float(p))) for p in probabilities]
    tail = max(mpf(0), mpf(1) - sum(probs))
    return entropy_bits_mp(probs + [tail]), float(tail)


def window_means_bruteforce(values, width: int) -> list[float]:
    """Per-window arithmetic means by direct python summation."""
    values = [float(v) for v in values]
    return [
        math.fsum(values[i : i + width]) / width
        for i in range(len(values) - width + 1)
    ]


def shading_bruteforce(means, width: int, n: int) -> list[float]:
    """Max window mean over covering windows, min-max normalized."""
    raw = []
    for token in range(1, n + 1):
        covering = [
            means[start - 1]
            for start in range(max(1, token - width + 1), min(token, len(means)) + 1)
        ]
        raw.append(max(covering))
    low, high = min(raw), max(raw)
    if high == low:
        return [0.0] * n
    return [(v - low) / (high - low) for v in raw]


# ---------------------------------------------------------------- strippers


class TokenSpanParser(HTMLParser):
    """Collects the text of every token span inside the transcript container."""

    def __init__(self):
        super().__init__()
        self.texts: list[str] = []
        self.hot_indices: list[int] = []
        self._in_transcript = 0
        self._span_depth = 0

    def handle_starttag(self, tag, attrs):
        attrs = dict(attrs)
        if tag == "div" and attrs.get("id") == "transcript":
            self._in_transcript = 1
            return
        if self._in_transcript and tag == "span":
            if self._span_depth == 0:
                self.texts.append("")
                if "hot" in (attrs.get("class") or "").split():
                    self.hot_indices.append(int(attrs["data-i"]))
            self._span_depth += 1

    def handle_endtag(self, tag):
        if self._in_transcript and tag == "span" and self._span_depth:
            self._span_depth -= 1
        elif tag == "div" and self._in_transcript and self._span_depth == 0:
            self._in_transcript = 0

    def handle_data(self, data):
        if self._in_transcript and self._span_depth:
            self.texts[-1] += data


def html_token_texts(document: bytes) -> list[str]:
    parser = TokenSpanParser()
    parser.feed(document.decode("utf-8"))
    return parser.texts


def strip_ansi_codes(data: bytes) -> bytes:
    return re.sub(rb"\x1b\[[0-9;]*m", b"", data)


# independent copy of the documented escape table, longest forms first
_LATEX_UNESCAPES = [
    ("\\textbackslash{}", "\\"),
    ("\\textasciicircum{}", "^"),
    ("\\textasciitilde{}", "~"),
    ("\\{", "{"),
    ("\\}", "}"),
    ("\\%", "%"),
    ("\\$", "$"),
    ("\\#", "#"),
    ("\\_", "_"),
    ("\\&", "&"),
]


def latex_unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        for escaped, plain in _LATEX_UNESCAPES:
            if text.startswith(escaped, i):
                out.append(plain)
                i += len(escaped)
                break
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def latex_body(document: bytes) -> str:
    text = document.decode("utf-8")
    _, _, rest = text.partition("\\begin{document}\n")
    body, _, _ = rest.rpartition("\n\\end{document}")
    return body


def strip_latex_overlay(document: bytes, unescape: bool = True) -> str:
    """Remove the highlight wrappers, recovering the raw transcript text."""
    body = latex_body(document)
    out = []
    i = 0
    marker = "\\entrohl{"
    while i < len(body):
        if body.startswith(marker, i):
            i += len(marker)
            while body[i] != "}":
                i += 1
            i += 1
            assert body[i] == "{", "wrapper must carry a second group"
            i += 1
            depth = 1
            content = []
            while depth:
                ch = body[i]
                if ch == "\\":
                    content.append(body[i : i + 2])
                    i += 2
                    continue
                if ch == "{":
                    depth += 1
                elif ch == "}":
                    depth -= 1
                    if depth == 0:
                        i += 1
                        break
                content.append(ch)
                i += 1
            raw = "".join(content)
            out.append(latex_unescape(raw) if unescape else raw)
        else:
            out.append(body[i])
            i += 1
    return "".join(out)
