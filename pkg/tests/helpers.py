"""Shared test oracles: finite differences, naive baselines, interval algebra.

Everything here is deliberately independent of the library's own
computation paths (plain loops, quadrature, explicit formulas) so tests
compare two routes to the same quantity.
"""

from __future__ import annotations

import math

import numpy as np

from karmic import ConfusionMatrix, metric_value


class FixedScorer:
    """Scorer stub returning precomputed values, ignoring features."""

    dim = None

    def __init__(self, values) -> None:
        self.values = np.asarray(values, dtype=float)

    def scores(self, X) -> np.ndarray:
        return self.values

    def score(self, x) -> float:
        return float(self.values[0])


def central_difference_gradient(spec, c: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Entrywise central finite differences of the metric value."""
    out = np.empty(4)
    for j in range(4):
        step = np.zeros(4)
        step[j] = h
        up = metric_value(spec, ConfusionMatrix(*(c + step)))
        down = metric_value(spec, ConfusionMatrix(*(c - step)))
        out[j] = (up - down) / (2.0 * h)
    return out


def random_interior_confusions(rng: np.random.Generator, count: int,
                               floor: float = 0.025) -> np.ndarray:
    """Simplex points with every entry at least ``floor``."""
    raw = rng.dirichlet(np.ones(4), size=count)
    shifted = raw * (1.0 - 4.0 * floor) + floor
    return shifted / shifted.sum(axis=1, keepdims=True)


def naive_confusion(scores, labels, weights, delta: float) -> np.ndarray:
    """Loop-based weighted confusion with the strict > rule."""
    tp = fp = fn = tn = 0.0
    for s, y, w in zip(scores, labels, weights):
        if s > delta:
            if y == 1:
                tp += w
            else:
                fp += w
        elif y == 1:
            fn += w
        else:
            tn += w
    return np.array([tp, fp, fn, tn])


def naive_epanechnikov(train_x, train_y, h: float, queries,
                       clip: float = 1e-6) -> np.ndarray:
    """O(n*m) reference for the kernel smoother (any dimension)."""
    train_x = np.atleast_2d(np.asarray(train_x, dtype=float))
    if train_x.shape[0] == 1 and np.asarray(train_y).size > 1:
        train_x = train_x.T
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    if queries.shape[1] != train_x.shape[1]:
        queries = queries.T
    pos = (np.asarray(train_y) == 1).astype(float)
    global_rate = float(np.clip(pos.mean(), clip, 1 - clip))
    out = np.empty(queries.shape[0])
    for i, q in enumerate(queries):
        u2 = ((train_x - q) ** 2).sum(axis=1) / h**2
        w = np.maximum(0.0, 1.0 - u2)
        den = w.sum()
        out[i] = (w @ pos) / den if den > 1e-12 else global_rate
    return np.clip(out, clip, 1 - clip)


def ols_slope(x, y) -> tuple[float, float]:
    """Plain least-squares line fit, explicit formulas."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xbar = x.mean()
    ybar = y.mean()
    slope = float(((x - xbar) * (y - ybar)).sum() / ((x - xbar) ** 2).sum())
    return slope, float(ybar - slope * xbar)


def sign_positive_intervals(fn, lo: float, hi: float, points: int = 40001):
    """Intervals of {z in (lo, hi): fn(z) > 0}, found by grid + bisection.

    Assumes fn keeps its sign outside (lo, hi); endpoints extend to +-inf
    accordingly.  Root refinement is plain bisection to ~1e-14.
    """
    grid = np.linspace(lo, hi, points)
    vals = np.array([fn(z) for z in grid])
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        a, b = grid[i], grid[i + 1]
        fa = vals[i]
        for _ in range(60):
            mid = 0.5 * (a + b)
            fm = fn(mid)
            if fm == 0.0:
                a = b = mid
                break
            if (fa > 0) == (fm > 0):
                a, fa = mid, fm
            else:
                b = mid
        roots.append(0.5 * (a + b))
    cuts = [-math.inf] + sorted(roots) + [math.inf]
    intervals = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        probe = 0.5 * (a + b)
        if not math.isfinite(a):
            probe = b - 1.0
        if not math.isfinite(b):
            probe = a + 1.0
        if fn(probe) > 0:
            intervals.append((a, b))
    return intervals


def symmetric_difference_with_ray(intervals, cut: float):
    """Symmetric difference between a union of intervals and (cut, inf)."""
    pts = sorted({cut, *(p for iv in intervals for p in iv if math.isfinite(p))})
    cuts = [-math.inf] + pts + [math.inf]
    out = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        probe = 0.5 * (a + b)
        if not math.isfinite(a):
            probe = b - 1.0
        if not math.isfinite(b):
            probe = a + 1.0
        inside = any(l < probe < r for l, r in intervals)
        if inside != (probe > cut):
            out.append((a, b))
    return out
