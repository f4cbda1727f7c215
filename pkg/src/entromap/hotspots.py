"""Hotspot selection over window means, plus per-token shading for heatmaps.

Two strategies: rank-based (top M windows, optionally with greedy non-maximum
suppression so the picks cover distinct text regions) and percentile-based
(every window at or above the nearest-rank alpha-th percentile, with touching
flagged windows merged into maximal spans). Both are deterministic: ties break
toward the smaller start index, and identical inputs serialize to identical
bytes.
"""

from __future__ import annotations

import heapq
import json
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .errors import DomainError, StructuralError, ValidationError
from .windows import WindowSeries


@dataclass(frozen=True)
class Hotspot:
    """A flagged token span [start, end], 1-based inclusive, with its score in bits.

    Rank-selected hotspots always span exactly the window length; percentile
    selection can merge neighbours into longer spans.
    """

    start: int
    end: int
    score: float

    def __post_init__(self):
        if self.start < 1 or self.end < self.start:
            raise StructuralError(f"bad hotspot span [{self.start}, {self.end}]")

    def tokens(self) -> range:
        return range(self.start, self.end + 1)

    def __len__(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class HotspotReport:
    """Selected hotspots plus per-token shading and the review-budget fraction.

    ``shading`` has one value in [0, 1] per transcript token; ``budget_fraction``
    is the share of tokens inside any hotspot, which under rank selection never
    exceeds M*W/n. ``top_m`` or ``alpha`` records the strategy parameter.
    """

    hotspots: tuple[Hotspot, ...]
    strategy: str
    window_length: int
    shading: tuple[float, ...]
    budget_fraction: float
    top_m: int | None = None
    alpha: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "hotspots", tuple(self.hotspots))
        object.__setattr__(self, "shading", tuple(float(s) for s in self.shading))
        if self.strategy not in ("rank", "percentile"):
            raise ValidationError(f"unknown strategy {self.strategy!r}")
        if not self.shading:
            raise ValidationError("shading must cover at least one token")
        if any(not 0.0 <= s <= 1.0 for s in self.shading):
            raise ValidationError("shading values must lie in [0, 1]")
        keys = [(-h.score, h.start) for h in self.hotspots]
        if keys != sorted(keys):
            raise ValidationError(
                "hotspots must be sorted by descending score, ties by ascending start"
            )
        if not 0.0 <= self.budget_fraction <= 1.0:
            raise ValidationError("budget_fraction must lie in [0, 1]")

    @property
    def token_count(self) -> int:
        return len(self.shading)

    def flagged_tokens(self) -> set[int]:
        """Union of all hotspot spans, as 1-based token indices."""
        covered: set[int] = set()
        for hotspot in self.hotspots:
            covered.update(hotspot.tokens())
        return covered

    def to_json(self) -> dict:
        doc: dict[str, object] = {
            "strategy": self.strategy,
            "W": self.window_length,
        }
        if self.top_m is not None:
            doc["M"] = self.top_m
        if self.alpha is not None:
            doc["alpha"] = self.alpha
        doc["hotspots"] = [
            {"start": h.start, "end": h.end, "score": h.score} for h in self.hotspots
        ]
        doc["shading"] = list(self.shading)
        doc["budget_fraction"] = self.budget_fraction
        return doc

    def to_json_bytes(self) -> bytes:
        return (
            json.dumps(self.to_json(), ensure_ascii=False, separators=(",", ":")) + "\n"
        ).encode("utf-8")

    @classmethod
    def from_json(cls, doc: dict) -> "HotspotReport":
        try:
            hotspots = tuple(
                Hotspot(int(h["start"]), int(h["end"]), float(h["score"]))
                for h in doc["hotspots"]
            )
            return cls(
                hotspots=hotspots,
                strategy=str(doc["strategy"]),
                window_length=int(doc["W"]),
                shading=tuple(float(s) for s in doc["shading"]),
                budget_fraction=float(doc["budget_fraction"]),
                top_m=int(doc["M"]) if "M" in doc else None,
                alpha=float(doc["alpha"]) if "alpha" in doc else None,
            )
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"not a hotspot report document: {exc}") from exc


def shading(window_series: WindowSeries, token_count: int) -> list[float]:
    """Per-token shade in [0, 1]: max window mean over covering windows, min-max
    normalized per document.

    The max (rather than the mean) keeps every token of a flagged window fully
    flagged; a constant raw profile normalizes to all zeros.
    """
    means = window_series.means
    width = window_series.window_length
    if token_count != len(means) + width - 1:
        raise StructuralError(
            f"token count {token_count} does not match "
            f"{len(means)} windows of length {width}"
        )
    raw: list[float] = []
    best: deque[int] = deque()  # window indices, means non-increasing
    for t in range(token_count):
        if t < len(means):
            while best and means[best[-1]] <= means[t]:
                best.pop()
            best.append(t)
        while best[0] < t - width + 1:
            best.popleft()
        raw.append(means[best[0]])
    low = min(raw)
    high = max(raw)
    if high == low:
        return [0.0] * token_count
    span = high - low
    return [(value - low) / span for value in raw]


def _build_report(
    window_series: WindowSeries,
    hotspots: Iterable[Hotspot],
    strategy: str,
    top_m: int | None = None,
    alpha: float | None = None,
) -> HotspotReport:
    spots = tuple(hotspots)
    n = window_series.token_count
    covered: set[int] = set()
    for spot in spots:
        covered.update(spot.tokens())
    return HotspotReport(
        hotspots=spots,
        strategy=strategy,
        window_length=window_series.window_length,
        shading=tuple(shading(window_series, n)),
        budget_fraction=len(covered) / n,
        top_m=top_m,
        alpha=alpha,
    )


def select_top_m(
    window_series: WindowSeries, top_m: int, suppress_overlap: bool = True
) -> HotspotReport:
    """Up to M windows with the largest means; ties break toward smaller starts.

    With ``suppress_overlap``, after each pick every window overlapping it is
    discarded before the next pick (greedy non-maximum suppression), so the
    selected spans are disjoint and flag at most M*W tokens.
    """
    if top_m < 1:
        raise DomainError(f"M must be >= 1, got {top_m}")
    means = window_series.means
    if not means:
        raise DomainError("cannot select hotspots from an empty window series")
    width = window_series.window_length
    if suppress_overlap:
        order = sorted(range(len(means)), key=lambda i: (-means[i], i))
        picked: list[int] = []
        for candidate in order:
            if all(abs(candidate - kept) >= width for kept in picked):
                picked.append(candidate)
                if len(picked) == top_m:
                    break
    else:
        # heap extraction of the M best; ties fall toward the smaller start
        picked = heapq.nlargest(
            top_m, range(len(means)), key=lambda i: (means[i], -i)
        )
    hotspots = tuple(Hotspot(i + 1, i + width, means[i]) for i in picked)
    return _build_report(window_series, hotspots, "rank", top_m=top_m)


def select_percentile(window_series: WindowSeries, alpha: float) -> HotspotReport:
    """Every window at or above the nearest-rank alpha-th percentile of the means.

    Overlapping or adjacent flagged windows merge into maximal variable-length
    spans scoring the best member window.
    """
    if not 0.0 < alpha < 100.0:
        raise DomainError(f"alpha must lie in (0, 100), got {alpha}")
    means = window_series.means
    if not means:
        raise DomainError("cannot select hotspots from an empty window series")
    width = window_series.window_length
    rank = max(1, math.ceil(alpha / 100.0 * len(means)))
    cutoff = sorted(means)[rank - 1]
    spans: list[list[float]] = []  # [start, end, score]
    for i, mean in enumerate(means):
        if mean < cutoff:
            continue
        start, end = i + 1, i + width
        if spans and start <= spans[-1][1] + 1:
            spans[-1][1] = max(spans[-1][1], end)
            spans[-1][2] = max(spans[-1][2], mean)
        else:
            spans.append([start, end, mean])
    hotspots = tuple(
        sorted(
            (Hotspot(int(s), int(e), float(score)) for s, e, score in spans),
            key=lambda h: (-h.score, h.start),
        )
    )
    return _build_report(window_series, hotspots, "percentile", alpha=alpha)
