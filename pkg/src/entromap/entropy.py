"""Shannon entropy of top-k+tail token distributions, in bits.

Endpoints expose the k most likely tokens per position; everything else is
one merged "tail" outcome of mass ``1 - sum(p_j)``. The entropy of that
coarse-grained distribution is a lower bound on the entropy over the full
vocabulary: merging outcomes can only remove entropy, and the bound is tight
exactly when the tail merges at most one positive-probability outcome.

Log base 2 throughout (fair coin = 1 bit); the convention 0*log2(0) = 0 makes
zero probabilities and an empty tail well-defined. Everything here is a pure
function over immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from .errors import DomainError, ValidationError
from .transcript import TokenAlternative, TokenRecord, Transcript


def _xlog2x(p: float) -> float:
    return p * math.log2(p) if p > 0.0 else 0.0


@dataclass(frozen=True)
class EntropySeries:
    """Per-token truncated entropies plus the unexplained tail mass at each position."""

    values: tuple[float, ...]
    tail_masses: tuple[float, ...]
    excluded_special: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(
            self, "tail_masses", tuple(float(m) for m in self.tail_masses)
        )
        if not self.values:
            raise ValidationError("an entropy series needs at least one position")
        if len(self.values) != len(self.tail_masses):
            raise ValidationError(
                f"{len(self.values)} values vs {len(self.tail_masses)} tail masses"
            )
        if any(v < 0.0 or not math.isfinite(v) for v in self.values):
            raise ValidationError("entropies must be finite and non-negative")
        if any(not 0.0 <= m <= 1.0 for m in self.tail_masses):
            raise ValidationError("tail masses must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class FullDistribution:
    """A complete probability vector; the test surrogate for a full vocabulary."""

    probabilities: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probabilities)
        object.__setattr__(self, "probabilities", probs)
        if not probs:
            raise ValidationError("a distribution needs at least one outcome")
        if any(p < 0.0 or p > 1.0 for p in probs):
            raise ValidationError("probabilities must lie in [0, 1]")
        total = math.fsum(probs)
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"probabilities sum to {total!r}, expected 1")

    def __len__(self) -> int:
        return len(self.probabilities)


def truncated_entropy(record: TokenRecord) -> tuple[float, float]:
    """Entropy in bits of the alternatives plus one merged tail outcome.

    Returns ``(entropy_bits, tail_mass)`` with
    ``entropy = -sum p_j log2 p_j - p_tail log2 p_tail`` and
    ``p_tail = max(0, 1 - sum p_j)``; a slightly negative tail from float
    rounding is silently clamped to zero.
    """
    probs = [math.exp(alt.logprob) for alt in record.alternatives]
    tail = max(0.0, 1.0 - math.fsum(probs))
    entropy = -math.fsum([_xlog2x(p) for p in probs] + [_xlog2x(tail)])
    return max(0.0, entropy), tail


def tail_mass(record: TokenRecord) -> float:
    """Probability mass the endpoint did not itemize at this position."""
    return max(
        0.0, 1.0 - math.fsum(math.exp(alt.logprob) for alt in record.alternatives)
    )


def entropy_series(transcript: Transcript, exclude_special: bool = False) -> EntropySeries:
    """Truncated entropy at every token position.

    With ``exclude_special``, layout-marker tokens contribute entropy 0 but
    keep their position, so window indexing stays aligned with the transcript.
    """
    values: list[float] = []
    tails: list[float] = []
    for record in transcript.tokens:
        bits, tail = truncated_entropy(record)
        if exclude_special and record.is_special:
            bits = 0.0
        values.append(bits)
        tails.append(tail)
    return EntropySeries(tuple(values), tuple(tails), excluded_special=exclude_special)


def full_entropy(distribution: FullDistribution) -> float:
    """Plain Shannon entropy in bits of a complete distribution."""
    return max(0.0, -math.fsum(_xlog2x(p) for p in distribution.probabilities))


def coarse_grain(distribution: FullDistribution, k: int) -> TokenRecord:
    """Keep the k most probable outcomes; the rest become the implied tail.

    Ties break by original outcome index, so results are deterministic.
    Zero-probability outcomes among the kept k are dropped: they carry neither
    mass nor entropy, and stored log-probabilities must stay finite. Feeding
    the result to :func:`truncated_entropy` gives the coarse-grained entropy.
    """
    if k <= 0:
        raise DomainError(f"k must be positive, got {k}")
    m = len(distribution)
    if k > m:
        raise DomainError(f"k={k} exceeds the distribution size {m}")
    probs = distribution.probabilities
    order = sorted(range(m), key=lambda i: (-probs[i], i))
    kept = [(i, probs[i]) for i in order[:k] if probs[i] > 0.0]
    alternatives = tuple(
        TokenAlternative(f"o{i + 1}", math.log(p)) for i, p in kept
    )
    return TokenRecord(
        index=1, chosen_text=alternatives[0].token_text, alternatives=alternatives
    )


def truncated_entropy_curve(distribution: FullDistribution) -> np.ndarray:
    """Truncated entropy for every cut k = 1..m in one vectorized sweep.

    Matches ``truncated_entropy(coarse_grain(d, k))[0]`` position for position;
    useful for choosing k by watching the gap to :func:`full_entropy` close.
    """
    p = np.asarray(distribution.probabilities, dtype=np.float64)
    order = np.argsort(-p, kind="stable")
    ps = p[order]
    safe = np.where(ps > 0.0, ps, 1.0)
    head = -np.cumsum(ps * np.log2(safe))
    tail = np.clip(1.0 - np.cumsum(ps), 0.0, 1.0)
    safe_tail = np.where(tail > 0.0, tail, 1.0)
    return np.maximum(0.0, head - tail * np.log2(safe_tail))


def tail_curve(distribution: FullDistribution) -> np.ndarray:
    """Tail mass left after keeping the top k outcomes, for k = 1..m."""
    p = np.asarray(distribution.probabilities, dtype=np.float64)
    ps = np.sort(p)[::-1]
    return np.clip(1.0 - np.cumsum(ps), 0.0, 1.0)
