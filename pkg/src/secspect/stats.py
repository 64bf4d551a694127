"""Nonparametric group statistics: Mann-Whitney U and Cohen's d.

The U statistic is computed from midranks, so tied observations contribute
half a point. Two-sided p-values come from the exact null distribution
(full enumeration over rank arrangements, run as a subset-sum count) when
both samples are small and tie-free, and from the tie-corrected normal
approximation with continuity correction otherwise. That selection mirrors
the behaviour of the usual statistics environments, which switch to the
approximation in the presence of ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ZeroVariance

EXACT_LIMIT = 12  # largest pooled size for the exact path


def _midranks(values: Sequence[float]) -> list:
    """Fractional ranks (1-based); tied values share the average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    index = 0
    while index < len(order):
        upper = index
        while (
            upper + 1 < len(order)
            and values[order[upper + 1]] == values[order[index]]
        ):
            upper += 1
        average = (index + upper) / 2.0 + 1.0
        for position in range(index, upper + 1):
            ranks[order[position]] = average
        index = upper + 1
    return ranks


def u_statistic(a: Sequence[float], b: Sequence[float]) -> float:
    """Mann-Whitney U of sample ``a`` over ``b`` (ties count one half)."""
    pooled = list(a) + list(b)
    ranks = _midranks(pooled)
    rank_sum = sum(ranks[: len(a)])
    return rank_sum - len(a) * (len(a) + 1) / 2.0


def _has_ties(pooled) -> bool:
    return len(set(pooled)) != len(pooled)


def _exact_p(a, b) -> float:
    """Two-sided p from the exact null distribution over rank arrangements.

    Works on doubled midranks so every partial sum stays an integer; the
    distribution is accumulated with a subset-sum dynamic program, which
    agrees with enumerating all C(n, |a|) group assignments.
    """
    pooled = list(a) + list(b)
    n1, n2 = len(a), len(b)
    doubled = [int(round(2 * rank)) for rank in _midranks(pooled)]
    observed = int(round(2 * u_statistic(a, b)))
    center = n1 * n2  # doubled mean of 2U
    threshold = abs(observed - center)

    # counts[k] maps a doubled rank-sum to the number of k-subsets reaching it
    counts = [dict() for _ in range(n1 + 1)]
    counts[0][0] = 1
    for rank in doubled:
        for size in range(min(n1, len(doubled)) - 1, -1, -1):
            if not counts[size]:
                continue
            target = counts[size + 1]
            for total, ways in counts[size].items():
                target[total + rank] = target.get(total + rank, 0) + ways
    offset = n1 * (n1 + 1)  # 2U = 2R - n1(n1+1)
    hits = 0
    total_arrangements = 0
    for rank_total, ways in counts[n1].items():
        total_arrangements += ways
        if abs((rank_total - offset) - center) >= threshold:
            hits += ways
    return hits / total_arrangements


def _approx_p(a, b) -> float:
    """Tie-corrected normal approximation with continuity correction."""
    pooled = list(a) + list(b)
    n1, n2 = len(a), len(b)
    n = n1 + n2
    u = u_statistic(a, b)
    mu = n1 * n2 / 2.0
    tally: dict = {}
    for value in pooled:
        tally[value] = tally.get(value, 0) + 1
    tie_term = sum(t ** 3 - t for t in tally.values())
    variance = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if variance <= 0:
        return 1.0  # both samples fully degenerate
    deviation = max(abs(u - mu) - 0.5, 0.0)
    z = deviation / math.sqrt(variance)
    return math.erfc(z / math.sqrt(2))


@dataclass(frozen=True)
class GroupComparison:
    group_a: tuple
    group_b: tuple
    u_statistic: float
    p_value: float
    effect_size: Optional[float]  # Cohen's d; None when undefined
    method: str  # exact | approx
    alpha: float = 0.05

    def significant(self) -> bool:
        return self.p_value < self.alpha


def mann_whitney(
    a: Sequence[float],
    b: Sequence[float],
    method: str = "auto",
    alpha: float = 0.05,
) -> GroupComparison:
    """Two-sided Mann-Whitney comparison of two observation groups.

    ``method`` is ``auto`` (exact for tie-free pooled samples of at most
    ``EXACT_LIMIT`` observations, approximation otherwise), ``exact``, or
    ``approx``.
    """
    if not a or not b:
        raise ValueError("both groups need at least one observation")
    if method == "auto":
        pooled = list(a) + list(b)
        method = (
            "exact"
            if len(pooled) <= EXACT_LIMIT and not _has_ties(pooled)
            else "approx"
        )
    if method == "exact":
        p_value = _exact_p(a, b)
    elif method == "approx":
        p_value = _approx_p(a, b)
    else:
        raise ValueError("method must be auto, exact, or approx")
    try:
        effect = cohens_d(a, b)
    except (ValueError, ZeroVariance):
        effect = None
    return GroupComparison(
        group_a=tuple(a),
        group_b=tuple(b),
        u_statistic=u_statistic(a, b),
        p_value=p_value,
        effect_size=effect,
        method=method,
        alpha=alpha,
    )


def cohens_d(a: Sequence[float], b: Sequence[float]) -> float:
    """Cohen's d with the pooled standard deviation.

    Sample variances use n - 1 denominators; the sign is positive when the
    mean of ``a`` exceeds the mean of ``b``.
    """
    n1, n2 = len(a), len(b)
    if n1 < 2 or n2 < 2:
        raise ValueError("both groups need at least two observations")
    mean_a = sum(a) / n1
    mean_b = sum(b) / n2
    var_a = sum((x - mean_a) ** 2 for x in a) / (n1 - 1)
    var_b = sum((x - mean_b) ** 2 for x in b) / (n2 - 1)
    pooled = math.sqrt(((n1 - 1) * var_a + (n2 - 1) * var_b) / (n1 + n2 - 2))
    if pooled == 0:
        raise ZeroVariance("pooled standard deviation is zero")
    return (mean_a - mean_b) / pooled
