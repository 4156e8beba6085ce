"""k-nearest-neighbour radii and ball volumes for point samples.

For each sample point the distance to its k-th nearest neighbour among the
other points is computed with an exact spatial index, and converted to the
volume of the corresponding Euclidean ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import gammaln

from .errors import EstimationError


def as_points(points) -> np.ndarray:
    """Validate and return an (n, d) float array of sample points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValueError(f"points must be an (n, d) array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain non-finite coordinates")
    return pts


def unit_ball_volume(d: int) -> float:
    """Volume of the d-dimensional Euclidean unit ball, pi^(d/2) / Gamma(d/2 + 1)."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


@dataclass(frozen=True)
class NeighborStats:
    """Per-point k-th neighbour radii and ball volumes."""

    k: int
    radii: np.ndarray
    volumes: np.ndarray
    unit_ball: float


def knn_stats(points, k: int) -> NeighborStats:
    """Radius and ball volume of the k-th nearest other point, for every point.

    The radius is the k-th order statistic of the distances to the other
    points, so exact ties (including duplicated points) are handled by
    multiset rank and the result does not depend on point ordering.
    """
    pts = as_points(points)
    n, d = pts.shape
    if n < 2:
        raise EstimationError(f"need at least 2 points for a neighbour query, got {n}")
    if not 1 <= k <= n - 1:
        raise EstimationError(f"k must satisfy 1 <= k <= n - 1, got k={k}, n={n}")
    tree = cKDTree(pts)
    # query k+1 including self; dropping the closest zero leaves the k-th
    # order statistic among the other points, ties included
    dist, _ = tree.query(pts, k=k + 1)
    radii = dist[:, k].astype(float)
    c0 = unit_ball_volume(d)
    volumes = c0 * radii**d
    return NeighborStats(k=k, radii=radii, volumes=volumes, unit_ball=c0)


class KCondition(NamedTuple):
    """Verdict of the consistency condition on k relative to n."""

    ok: bool
    statistic: float
    threshold: float
    message: str | None


def validate_k(n: int, k: int) -> KCondition:
    """Soft check that k is small enough for consistent estimation.

    Warns when k^(3/2) Gamma(k) / Gamma(k + 1/2) exceeds half of sqrt(n);
    never an error.
    """
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must satisfy 1 <= k <= n - 1, got k={k}, n={n}")
    statistic = k**1.5 * math.exp(gammaln(k) - gammaln(k + 0.5))
    threshold = 0.5 * math.sqrt(n)
    if statistic > threshold:
        return KCondition(
            ok=False,
            statistic=statistic,
            threshold=threshold,
            message=(
                f"k={k} is large for n={n}: consistency statistic "
                f"{statistic:.3g} exceeds 0.5*sqrt(n) = {threshold:.3g}; "
                "expect inflated variance"
            ),
        )
    return KCondition(ok=True, statistic=statistic, threshold=threshold, message=None)
