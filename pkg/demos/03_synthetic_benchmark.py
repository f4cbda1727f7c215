#!/usr/bin/env python3
"""Desk-scale benchmark on synthetic landscapes with planted error spans.

Real scanned-page corpora need annotators; a synthetic series with planted
high-entropy spans gives ground truth for free. This demo sweeps the window
length and both selection strategies and reports how much of the planted
error mass the flagged regions recover at what review budget.

Run from the repo root: python3 demos/03_synthetic_benchmark.py
"""

import numpy as np

from entromap import (
    SyntheticSpec,
    generate_synthetic,
    overlap,
    select_percentile,
    select_top_m,
    window_means,
)

SEEDS = range(40)
N = 500


def sample_spans(rng, count=3, length=8):
    while True:
        starts = np.sort(rng.choice(N - length + 1, size=count, replace=False) + 1)
        if all(b - a >= length for a, b in zip(starts, starts[1:])):
            return tuple((int(s), length, 2.0) for s in starts)


def run(width, select):
    recalls, budgets = [], []
    for seed in SEEDS:
        spans = sample_spans(np.random.default_rng(seed))
        series, truth = generate_synthetic(
            SyntheticSpec(n=N, baseline_mean=0.3, baseline_noise_sd=0.1, spans=spans, seed=seed)
        )
        report = select(window_means(series, width))
        result = overlap(report, truth)
        recalls.append(result.recall)
        budgets.append(result.budget_fraction)
    return float(np.mean(recalls)), float(np.mean(budgets))


print(f"{len(list(SEEDS))} synthetic documents, n={N}, three planted 8-token spans, +2.0 bits")
print()
print("rank strategy, top M=3 windows, overlap suppression on:")
print(f"{'W':>4} {'mean recall':>12} {'mean budget':>12}")
for width in (5, 10, 20):
    recall, budget = run(width, lambda ws: select_top_m(ws, 3, suppress_overlap=True))
    print(f"{width:>4} {recall:>12.3f} {budget:>12.1%}")
print()
print("percentile strategy (flag windows at or above the cutoff, merge runs):")
print(f"{'alpha':>6} {'mean recall':>12} {'mean budget':>12}")
for alpha in (90.0, 95.0, 99.0):
    recall, budget = run(10, lambda ws: select_percentile(ws, alpha))
    print(f"{alpha:>6.0f} {recall:>12.3f} {budget:>12.1%}")
print()
print("W=10 keeps whole spans inside single windows at a ~6% budget; W=5")
print("fragments them, and W=20 pays double the budget for the same recall.")
print("Percentile selection trades a higher budget for catching weaker spans.")
