"""
Maximum Mean Discrepancy
Gaussian-kernel MMD over moment-matching action-agreement features
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from learner.policy import greedy_actions
from learner.replay import TransitionBatch
from utils.errors import UsageError

DEFAULT_CHUNK_SIZE = 32


@dataclass(frozen=True)
class MmdReport:
    mmd: float
    sigma: float
    n_p: int
    n_q: int
    disagreement_p: tuple
    disagreement_q: tuple

    def to_dict(self):
        return {
            "mmd": self.mmd,
            "sigma": self.sigma,
            "n_p": self.n_p,
            "n_q": self.n_q,
            "disagreement_p": list(self.disagreement_p),
            "disagreement_q": list(self.disagreement_q),
        }


def agreement_features(chunk, evaluated, chunk_size=DEFAULT_CHUNK_SIZE):
    """
    Agreement features of `evaluated` on a reference chunk.

    Entry (t, k), flattened t-major / agent-minor, is 1 when the evaluated
    policy's greedy action for agent k on the stored state s_t equals the
    stored reference action, else 0.

    Args:
        chunk (list[Transition]): Reference transitions; only the first `chunk_size` are used
        evaluated (PolicyParams): Policy being compared
        chunk_size (int): T_chunk

    Returns:
        np.ndarray: Binary vector of length K * chunk_size

    Raises:
        UsageError: If the chunk is shorter than `chunk_size`
    """
    if len(chunk) < chunk_size:
        raise UsageError(f"Chunk has {len(chunk)} transitions, need {chunk_size}")
    batch = TransitionBatch.from_transitions(list(chunk[:chunk_size]))
    agents = batch.actions.shape[1]
    greedy = np.stack([greedy_actions(evaluated, k, batch.states) for k in range(agents)], axis=1)
    return (greedy == batch.actions).astype(np.float64).reshape(-1)


def chunk_transitions(transitions, chunk_size=DEFAULT_CHUNK_SIZE):
    """Consecutive full windows of `chunk_size`; the remainder is dropped."""
    count = len(transitions) // chunk_size
    return [transitions[i * chunk_size:(i + 1) * chunk_size] for i in range(count)]


def gaussian_kernel(u, v, sigma):
    """
    exp(-||u - v||^2 / (2 sigma^2)).

    Raises:
        UsageError: If sigma <= 0 or the vectors differ in length
    """
    if not sigma > 0:
        raise UsageError(f"Kernel bandwidth must be positive, got {sigma}")
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise UsageError(f"Kernel inputs differ in shape: {u.shape} vs {v.shape}")
    return float(np.exp(-np.sum((u - v) ** 2) / (2.0 * sigma**2)))


def median_bandwidth(pooled):
    """Median pairwise Euclidean distance; 1.0 when that median is 0 or undefined."""
    if len(pooled) < 2:
        return 1.0
    median = float(np.median(pdist(pooled, "euclidean")))
    return median if median > 0 else 1.0


def _kernel_mean(x, y, sigma):
    gram = np.exp(-cdist(x, y, "sqeuclidean") / (2.0 * sigma**2))
    # fsum is exactly rounded, so the estimate does not depend on summation order
    return math.fsum(gram.ravel()) / gram.size


def mmd(samples_p, samples_q, sigma=None):
    """
    Biased (V-statistic) MMD between two sets of feature vectors:
    sqrt(E[k(x, x')] - 2 E[k(x, y)] + E[k(y, y')]), negative rounding
    clamped to 0.

    Args:
        samples_p (list[np.ndarray]): Features from p
        samples_q (list[np.ndarray]): Features from q
        sigma (float): Kernel bandwidth; median heuristic over the pooled samples when None

    Returns:
        MmdReport
    """
    if len(samples_p) == 0 or len(samples_q) == 0:
        raise UsageError("MMD needs nonempty sample sets")
    x = np.atleast_2d(np.asarray(samples_p, dtype=np.float64))
    y = np.atleast_2d(np.asarray(samples_q, dtype=np.float64))
    if x.shape[1] != y.shape[1]:
        raise UsageError(f"Feature lengths differ: {x.shape[1]} vs {y.shape[1]}")
    if sigma is None:
        sigma = median_bandwidth(np.vstack([x, y]))
    elif not sigma > 0:
        raise UsageError(f"Kernel bandwidth must be positive, got {sigma}")

    squared = (_kernel_mean(x, x, sigma) + _kernel_mean(y, y, sigma)) - 2.0 * _kernel_mean(x, y, sigma)
    return MmdReport(
        mmd=math.sqrt(max(squared, 0.0)),
        sigma=float(sigma),
        n_p=len(x),
        n_q=len(y),
        disagreement_p=tuple(float(1.0 - row.mean()) for row in x),
        disagreement_q=tuple(float(1.0 - row.mean()) for row in y),
    )
