"""Pearson correlation over bucket-mean-resampled series."""

from __future__ import annotations

import math
from typing import Dict, List, Sequence, Tuple

from obstack.core.errors import ObstackError


class InsufficientOverlap(ObstackError):
    """Fewer than three common non-empty buckets after resampling."""


class ZeroVariance(ObstackError):
    """One of the aligned series is constant; r is undefined."""


def bucket_means(
    points: Sequence[Tuple[int, float]], start: int, end: int, step: int
) -> Dict[int, float]:
    """Mean value per bucket index for points with start <= t < end."""
    sums: Dict[int, float] = {}
    counts: Dict[int, int] = {}
    for ts, value in points:
        if not start <= ts < end:
            continue
        bucket = (ts - start) // step
        sums[bucket] = sums.get(bucket, 0.0) + value
        counts[bucket] = counts.get(bucket, 0) + 1
    return {b: sums[b] / counts[b] for b in sums}


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation coefficient of two equal-length sequences."""
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    cov = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    var_x = sum((x - mean_x) ** 2 for x in xs)
    var_y = sum((y - mean_y) ** 2 for y in ys)
    if var_x == 0.0 or var_y == 0.0:
        raise ZeroVariance("constant series after alignment")
    return cov / math.sqrt(var_x * var_y)


def correlate_points(
    points_a: Sequence[Tuple[int, float]],
    points_b: Sequence[Tuple[int, float]],
    window: Tuple[int, int],
    step: int,
) -> float:
    """Correlation of two raw series after bucket-mean alignment.

    Buckets empty in either series are dropped pairwise; at least three
    common buckets are required.
    """
    start, end = window
    means_a = bucket_means(points_a, start, end, step)
    means_b = bucket_means(points_b, start, end, step)
    common = sorted(set(means_a) & set(means_b))
    if len(common) < 3:
        raise InsufficientOverlap(f"only {len(common)} common buckets")
    return pearson([means_a[b] for b in common], [means_b[b] for b in common])
