"""Platt scaling: sigmoid calibration from classifier margins to probabilities.

Fits P(y=1 | margin) = 1 / (1 + exp(A * margin + B)) by regularized maximum
likelihood with Newton iterations and backtracking line search. Targets are
smoothed toward the class priors, so the fitted map is strictly inside (0, 1)
for every finite margin.
"""

from __future__ import annotations

import math
from typing import Sequence


def fit_platt(margins: Sequence[float], labels: Sequence[int]) -> tuple[float, float]:
    """Fit (A, B) on training margins against binary {0, 1} labels."""
    if len(margins) != len(labels):
        raise ValueError("margins and labels must have equal length")
    prior1 = sum(1 for y in labels if y == 1)
    prior0 = len(labels) - prior1

    max_iter = 100
    min_step = 1e-10
    sigma = 1e-12
    eps = 1e-5

    hi = (prior1 + 1.0) / (prior1 + 2.0)
    lo = 1.0 / (prior0 + 2.0)
    t = [hi if y == 1 else lo for y in labels]

    a, b = 0.0, math.log((prior0 + 1.0) / (prior1 + 1.0))

    def objective(a_: float, b_: float) -> float:
        val = 0.0
        for m, ti in zip(margins, t):
            f = m * a_ + b_
            if f >= 0:
                val += ti * f + math.log1p(math.exp(-f))
            else:
                val += (ti - 1.0) * f + math.log1p(math.exp(f))
        return val

    fval = objective(a, b)
    for _ in range(max_iter):
        h11 = h22 = sigma
        h21 = g1 = g2 = 0.0
        for m, ti in zip(margins, t):
            f = m * a + b
            if f >= 0:
                p = math.exp(-f) / (1.0 + math.exp(-f))
                q = 1.0 / (1.0 + math.exp(-f))
            else:
                p = 1.0 / (1.0 + math.exp(f))
                q = math.exp(f) / (1.0 + math.exp(f))
            d2 = p * q
            h11 += m * m * d2
            h22 += d2
            h21 += m * d2
            d1 = ti - p
            g1 += m * d1
            g2 += d1
        if abs(g1) < eps and abs(g2) < eps:
            break
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= min_step:
            new_a, new_b = a + step * da, b + step * db
            new_f = objective(new_a, new_b)
            if new_f < fval + 1e-4 * step * gd:
                a, b, fval = new_a, new_b, new_f
                break
            step /= 2.0
        else:
            break
    return a, b


def apply_platt(a: float, b: float, margin: float) -> float:
    """Calibrated probability, strictly inside (0, 1) for finite inputs."""
    f = a * margin + b
    if f >= 0:
        p = math.exp(-f) / (1.0 + math.exp(-f))
    else:
        p = 1.0 / (1.0 + math.exp(f))
    # Guard against underflow at extreme margins.
    tiny = 1e-15
    return min(1.0 - tiny, max(tiny, p))
