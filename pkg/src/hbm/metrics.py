"""Training objective and evaluation statistics.

Cross-entropy is weighted by inverse class frequency so the expected weight
under the class distribution is 1 and the loss scale stays comparable
across imbalance levels. AUC uses the rank formulation with average ranks
for ties (0.5 credit per tied pair). The Mann-Whitney U test enumerates the
exact permutation distribution for pooled samples of at most 10, and
otherwise uses the tie-corrected normal approximation with a 0.5 continuity
correction:

    p = erfc(max(0, |U - mu| - 0.5) / (sigma * sqrt(2)))

which any reimplementation (e.g. the annotation UI) must reproduce.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, MetricError


@dataclass
class ClassWeights:
    weights: np.ndarray

    def __getitem__(self, y: int) -> float:
        return float(self.weights[y])


def class_weights(class_counts) -> ClassWeights:
    """Inverse-frequency weights: weight[y] = N / (K * count[y]).

    The frequency-weighted mean of the weights is exactly 1.
    """
    counts = np.asarray(class_counts, dtype=np.float64)
    if counts.ndim != 1 or counts.size < 2:
        raise ConfigError(f"need counts for at least 2 classes, got {counts.shape}")
    if np.any(counts <= 0):
        raise ConfigError(f"every class must appear in training data, got counts {counts}")
    total = counts.sum()
    return ClassWeights(weights=total / (counts.size * counts))


def weighted_ce(logits, y: int, w: ClassWeights) -> tuple[float, np.ndarray]:
    """Per-document loss and its gradient at the logits.

    loss = weight[y] * (-log softmax(logits)[y]), stabilized via log-sum-exp;
    dlogits = weight[y] * (softmax(logits) - onehot(y)).
    """
    t = np.asarray(logits, dtype=np.float64)
    if not 0 <= y < t.size:
        raise IndexError(f"class index {y} out of range for {t.size} logits")
    shifted = t - t.max()
    lse = math.log(np.exp(shifted).sum())
    log_probs = shifted - lse
    wy = w[y]
    loss = -wy * log_probs[y]
    dlogits = wy * np.exp(log_probs)
    dlogits[y] -= wy
    return float(loss), dlogits


def _average_ranks(values: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """1-based ranks with tied values sharing their average rank.

    Returns (ranks aligned to the input order, tie group sizes).
    """
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    tie_sizes = []
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j + 2) / 2.0  # average of 1-based ranks i+1 .. j+1
        ranks[order[i : j + 1]] = avg
        tie_sizes.append(j - i + 1)
        i = j + 1
    return ranks, tie_sizes


def auc(scores, labels) -> float:
    """Area under the ROC curve via the rank statistic.

    Equals (#(pos > neg) + 0.5 * #(pos = neg)) / (P * N).
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise MetricError(f"scores and labels must be 1-D and aligned, got {s.shape}/{y.shape}")
    pos = int((y == 1).sum())
    neg = int((y == 0).sum())
    if pos == 0 or neg == 0:
        raise MetricError("AUC needs both classes present")
    ranks, _ = _average_ranks(s)
    r_pos = ranks[y == 1].sum()
    u = r_pos - pos * (pos + 1) / 2.0
    return float(u / (pos * neg))


def _u_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """U for group a: wins count 1, ties 0.5."""
    gt = (a[:, None] > b[None, :]).sum()
    eq = (a[:, None] == b[None, :]).sum()
    return float(gt) + 0.5 * float(eq)


EXACT_LIMIT = 10


def mann_whitney_u(group_a, group_b) -> tuple[float, float]:
    """Two-sided Mann-Whitney U test.

    Returns (U of group_a, p). Exact permutation enumeration when the pooled
    sample has at most EXACT_LIMIT observations; otherwise the tie-corrected
    normal approximation with continuity correction.
    """
    a = np.asarray(group_a, dtype=np.float64)
    b = np.asarray(group_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise MetricError("both groups must be non-empty")
    n_a, n_b = a.size, b.size
    n = n_a + n_b
    u_obs = _u_statistic(a, b)

    if n <= EXACT_LIMIT:
        pooled = np.concatenate([a, b])
        # 2*U is an integer, so deviations from the center compare exactly
        dev_obs = abs(int(round(2 * u_obs)) - n_a * n_b)
        hits = 0
        total = 0
        for idx in itertools.combinations(range(n), n_a):
            sel = np.zeros(n, dtype=bool)
            sel[list(idx)] = True
            u = _u_statistic(pooled[sel], pooled[~sel])
            if abs(int(round(2 * u)) - n_a * n_b) >= dev_obs:
                hits += 1
            total += 1
        return u_obs, hits / total

    pooled = np.concatenate([a, b])
    _, tie_sizes = _average_ranks(pooled)
    mu = n_a * n_b / 2.0
    tie_term = sum(t**3 - t for t in tie_sizes)
    sigma2 = n_a * n_b / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if sigma2 <= 0.0:
        return u_obs, 1.0
    z = max(0.0, (abs(u_obs - mu) - 0.5) / math.sqrt(sigma2))
    return u_obs, min(1.0, math.erfc(z / math.sqrt(2.0)))
