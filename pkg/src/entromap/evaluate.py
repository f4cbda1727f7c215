"""Hotspot-vs-annotation overlap metrics and synthetic series with planted spans.

Annotations are token-index based: reviewers flag 1-based positions in the
emitted token stream (the HTML report shows each token's index to make that
practical). The synthetic generator plants elevated spans on a noisy baseline
so detector recall can be measured quantitatively at desk scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .entropy import EntropySeries
from .errors import DomainError, StructuralError, ValidationError
from .hotspots import HotspotReport


@dataclass(frozen=True)
class AnnotationSet:
    """Token indices one annotator flagged as erroneous in one document."""

    document_id: str
    flagged_tokens: frozenset[int]
    annotator_id: str

    def __post_init__(self):
        flagged = frozenset(int(i) for i in self.flagged_tokens)
        object.__setattr__(self, "flagged_tokens", flagged)
        if any(i < 1 for i in flagged):
            raise ValidationError("flagged token indices are 1-based, got one < 1")

    def to_json(self) -> dict:
        return {
            "doc": self.document_id,
            "annotator": self.annotator_id,
            "flagged": sorted(self.flagged_tokens),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AnnotationSet":
        try:
            return cls(
                document_id=str(doc["doc"]),
                flagged_tokens=frozenset(int(i) for i in doc["flagged"]),
                annotator_id=str(doc["annotator"]),
            )
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"not an annotation document: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "AnnotationSet":
        return cls.from_json(json.loads(Path(path).read_text("utf-8")))


def union_annotations(sets: Sequence[AnnotationSet]) -> AnnotationSet:
    """Tokens flagged by any annotator; all sets must describe one document."""
    if not sets:
        raise DomainError("need at least one annotation set")
    ids = {annotation.document_id for annotation in sets}
    if len(ids) > 1:
        raise StructuralError(f"annotation sets span multiple documents: {sorted(ids)}")
    merged = frozenset().union(*(annotation.flagged_tokens for annotation in sets))
    return AnnotationSet(
        document_id=sets[0].document_id, flagged_tokens=merged, annotator_id="union"
    )


@dataclass(frozen=True)
class OverlapResult:
    """How many annotator-flagged tokens fell inside vs outside the hotspots.

    ``recall`` is None (and the result is marked empty) when nothing was
    flagged; ``budget_fraction`` is the share of tokens a reviewer had to read.
    """

    inside: int
    outside: int
    recall: float | None
    budget_fraction: float

    @property
    def empty(self) -> bool:
        return self.inside + self.outside == 0

    def to_json(self) -> dict:
        return {
            "inside": self.inside,
            "outside": self.outside,
            "recall": self.recall,
            "budget_fraction": self.budget_fraction,
            "empty": self.empty,
        }


def overlap(report: HotspotReport, annotations: AnnotationSet) -> OverlapResult:
    """Count flagged tokens inside the union of hotspot spans."""
    covered = report.flagged_tokens()
    flagged = annotations.flagged_tokens
    inside = len(flagged & covered)
    outside = len(flagged) - inside
    recall = inside / (inside + outside) if flagged else None
    return OverlapResult(
        inside=inside,
        outside=outside,
        recall=recall,
        budget_fraction=report.budget_fraction,
    )


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic entropy series with planted high-entropy spans.

    ``spans`` entries are ``(start, length, spike_bits)`` with 1-based starts;
    spans must fit in [1, n] and must not overlap. The baseline is a
    clipped-at-zero normal — a declared testing artifact, not a model of real
    transcripts.
    """

    n: int
    baseline_mean: float
    baseline_noise_sd: float
    spans: tuple[tuple[int, int, float], ...]
    seed: int

    def __post_init__(self):
        spans = tuple(
            (int(start), int(length), float(spike)) for start, length, spike in self.spans
        )
        object.__setattr__(self, "spans", spans)
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if self.baseline_noise_sd < 0:
            raise DomainError("baseline noise sd must be >= 0")
        for start, length, spike in spans:
            if spike <= 0:
                raise DomainError(f"spike must be > 0, got {spike}")
            if length < 1 or start < 1 or start + length - 1 > self.n:
                raise DomainError(
                    f"span ({start}, {length}) does not fit in [1, {self.n}]"
                )
        ordered = sorted(spans)
        for (s1, l1, _), (s2, _, _) in zip(ordered, ordered[1:]):
            if s2 <= s1 + l1 - 1:
                raise DomainError(f"spans overlap near token {s2}")

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "baseline_mean": self.baseline_mean,
            "baseline_noise_sd": self.baseline_noise_sd,
            "spans": [list(span) for span in self.spans],
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SyntheticSpec":
        try:
            return cls(
                n=int(doc["n"]),
                baseline_mean=float(doc["baseline_mean"]),
                baseline_noise_sd=float(doc["baseline_noise_sd"]),
                spans=tuple(tuple(span) for span in doc["spans"]),
                seed=int(doc["seed"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise StructuralError(f"not a synthetic spec document: {exc}") from exc


def generate_synthetic(spec: SyntheticSpec) -> tuple[EntropySeries, AnnotationSet]:
    """Deterministic synthetic series plus its planted-span ground truth.

    Baseline values are drawn from normal(mean, sd) clipped at zero, then every
    span is elevated by its spike. The annotation set flags every span token.
    """
    rng = np.random.default_rng(spec.seed)
    values = rng.normal(spec.baseline_mean, spec.baseline_noise_sd, spec.n)
    values = np.clip(values, 0.0, None)
    truth: set[int] = set()
    for start, length, spike in spec.spans:
        values[start - 1 : start - 1 + length] += spike
        truth.update(range(start, start + length))
    series = EntropySeries(
        values=tuple(values.tolist()),
        tail_masses=(0.0,) * spec.n,
        excluded_special=False,
    )
    annotations = AnnotationSet(
        document_id=f"synthetic-{spec.seed}",
        flagged_tokens=frozenset(truth),
        annotator_id="planted",
    )
    return series, annotations
