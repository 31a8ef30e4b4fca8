"""Log-log regression for empirical scaling exponents."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class ScalingResult:
    """Fitted power law ``y ~ exp(intercept) * x**slope``.

    ``points`` holds ``(x, mean, stderr)`` triples in sweep order.
    """

    points: list
    slope: float
    intercept: float
    r2: float

    def value_at(self, x: float) -> float:
        return math.exp(self.intercept) * x ** self.slope


def fit_loglog(points) -> ScalingResult:
    """Ordinary least squares on (ln x, ln y).

    ``points`` is a sequence of ``(x, y)`` or ``(x, y, stderr)`` tuples; all
    x and y must be positive.  A constant y gives slope 0 and r2 = 1.
    """
    pts = [tuple(p) for p in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    for p in pts:
        if p[0] <= 0 or p[1] <= 0:
            raise ValueError(f"nonpositive value in point {p}")

    lx = [math.log(p[0]) for p in pts]
    ly = [math.log(p[1]) for p in pts]
    k = len(pts)
    mx = sum(lx) / k
    my = sum(ly) / k
    sxx = sum((v - mx) ** 2 for v in lx)
    sxy = sum((u - mx) * (v - my) for u, v in zip(lx, ly))
    if sxx == 0:
        raise ValueError("all x values identical")
    slope = sxy / sxx
    intercept = my - slope * mx
    ss_res = sum((v - (intercept + slope * u)) ** 2 for u, v in zip(lx, ly))
    ss_tot = sum((v - my) ** 2 for v in ly)
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    triples = [(p[0], p[1], p[2] if len(p) > 2 else 0.0) for p in pts]
    return ScalingResult(points=triples, slope=slope, intercept=intercept, r2=r2)


def aggregate_trials(x_values, samples_per_x) -> ScalingResult:
    """Fit means of repeated trials: ``samples_per_x[i]`` lists y values."""
    pts = []
    for x, samples in zip(x_values, samples_per_x):
        k = len(samples)
        mean = sum(samples) / k
        var = sum((s - mean) ** 2 for s in samples) / k if k > 1 else 0.0
        stderr = (var / k) ** 0.5 if k > 1 else 0.0
        pts.append((x, mean, stderr))
    return fit_loglog(pts)
