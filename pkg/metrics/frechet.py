"""
Discrete Fréchet Distance
Trajectory difference between two (x, y) polylines
"""

import numpy as np
from scipy.spatial.distance import cdist

from utils.errors import UsageError


def _as_points(trajectory, name):
    points = np.asarray(trajectory, dtype=np.float64)
    if points.size == 0:
        raise UsageError(f"Trajectory {name} is empty")
    if points.ndim != 2 or points.shape[1] != 2:
        raise UsageError(f"Trajectory {name} must be a sequence of (x, y) points, got shape {points.shape}")
    if not np.all(np.isfinite(points)):
        raise UsageError(f"Trajectory {name} has non-finite coordinates")
    return points


def frechet_distance(p, q):
    """
    Minimum over monotone couplings of the largest paired Euclidean distance.

    C[i, j] = max(d(p_i, q_j), min(C[i-1, j], C[i-1, j-1], C[i, j-1])),
    filled in O(|P|·|Q|) time and memory.

    Args:
        p (sequence of (x, y)): First trajectory, nonempty
        q (sequence of (x, y)): Second trajectory, nonempty

    Returns:
        float: Distance in meters
    """
    p = _as_points(p, "P")
    q = _as_points(q, "Q")
    n, m = len(p), len(q)
    dist = cdist(p, q, "euclidean")
    cost = np.full((n + 1, m + 1), np.inf)
    cost[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost[i, j] = max(dist[i - 1, j - 1], min(cost[i - 1, j], cost[i - 1, j - 1], cost[i, j - 1]))
    return float(cost[n, m])
