from __future__ import annotations

import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from secspect import stats
from secspect.errors import ZeroVariance


def _brute_force_p(a, b):
    """Exact two-sided p by enumerating every group assignment."""
    pooled = list(a) + list(b)
    n1 = len(a)
    order = sorted(range(len(pooled)), key=lambda i: pooled[i])
    ranks = [0.0] * len(pooled)
    i = 0
    while i < len(pooled):
        j = i
        while j < len(pooled) and pooled[order[j]] == pooled[order[i]]:
            j += 1
        midrank = (i + 1 + j) / 2.0
        for k in range(i, j):
            ranks[order[k]] = midrank
        i = j
    def u_of(indexes):
        rank_sum = sum(ranks[i] for i in indexes)
        return rank_sum - n1 * (n1 + 1) / 2.0
    observed = u_of(range(n1))
    center = len(a) * len(b) / 2.0
    threshold = abs(observed - center)
    hits = 0
    total = 0
    for combo in itertools.combinations(range(len(pooled)), n1):
        total += 1
        if abs(u_of(combo) - center) >= threshold - 1e-12:
            hits += 1
    return hits / total


def test_u_statistic_known_values():
    assert stats.u_statistic([1, 2, 3], [4, 5, 6]) == 0.0
    assert stats.u_statistic([4, 5, 6], [1, 2, 3]) == 9.0
    assert stats.u_statistic([1, 3], [2, 4]) == 1.0
    # ties share midranks: pooled [1, 2, 2, 3] ranks the twos at 2.5 each
    assert stats.u_statistic([1, 2], [2, 3]) == 0.5


def test_exact_two_sided_p_small_case():
    result = stats.mann_whitney([1, 2, 3], [10, 11, 12])
    assert result.method == "exact"
    assert result.p_value == pytest.approx(0.1)
    assert result.u_statistic == 0.0


def test_exact_handles_ties_via_midranks():
    a, b = [1, 2, 2], [2, 3, 4]
    result = stats.mann_whitney(a, b, method="exact")
    assert result.p_value == pytest.approx(_brute_force_p(a, b), abs=1e-12)


def test_auto_uses_exact_only_when_small_and_tie_free():
    small = stats.mann_whitney([1, 2, 3], [4, 5, 6])
    assert small.method == "exact"
    tied = stats.mann_whitney([1, 2, 2], [2, 3, 4])
    assert tied.method == "approx"
    big_a = list(range(7))
    big_b = list(range(10, 17))
    assert len(big_a) + len(big_b) > stats.EXACT_LIMIT
    assert stats.mann_whitney(big_a, big_b).method == "approx"


def test_approx_uses_continuity_correction_and_tie_term():
    # frozen against the analysis pipeline's trial-2 comparison
    a = [9.0 / 14, 10.0 / 14, 8.0 / 14, 9.0 / 14]
    b = [4.0 / 14, 5.0 / 14, 2.0 / 14]
    result = stats.mann_whitney(a, b, method="approx")
    assert result.p_value == pytest.approx(0.049745990721503014, abs=1e-15)


def test_method_argument_is_validated():
    with pytest.raises(ValueError):
        stats.mann_whitney([1], [2], method="bootstrap")
    with pytest.raises(ValueError):
        stats.mann_whitney([], [1, 2])


def test_cohens_d_known_value():
    assert stats.cohens_d([1, 2, 3], [4, 5, 6]) == pytest.approx(-3.0)
    assert stats.cohens_d([4, 5, 6], [1, 2, 3]) == pytest.approx(3.0)


def test_cohens_d_needs_two_observations_per_group():
    with pytest.raises(ValueError):
        stats.cohens_d([1], [2, 3])


def test_cohens_d_zero_variance():
    with pytest.raises(ZeroVariance):
        stats.cohens_d([2, 2], [2, 2])


def test_effect_size_is_none_when_undefined():
    degenerate = stats.mann_whitney([5, 5], [5, 5])
    assert degenerate.effect_size is None
    assert degenerate.p_value == 1.0


def test_significance_uses_alpha():
    result = stats.mann_whitney([1, 2, 3], [10, 11, 12], alpha=0.15)
    assert result.significant()
    stricter = stats.mann_whitney([1, 2, 3], [10, 11, 12], alpha=0.05)
    assert not stricter.significant()


_VALUES = st.integers(min_value=-20, max_value=20)


@settings(max_examples=150, deadline=None)
@given(
    a=st.lists(_VALUES, min_size=1, max_size=6),
    b=st.lists(_VALUES, min_size=1, max_size=6),
)
def test_exact_p_equals_enumeration(a, b):
    result = stats.mann_whitney(a, b, method="exact")
    assert result.p_value == pytest.approx(_brute_force_p(a, b), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(
    a=st.lists(_VALUES, min_size=2, max_size=8),
    b=st.lists(_VALUES, min_size=2, max_size=8),
)
def test_p_values_are_probabilities(a, b):
    for method in ("exact", "approx"):
        p = stats.mann_whitney(a, b, method=method).p_value
        assert 0.0 < p <= 1.0 or math.isclose(p, 1.0)


@settings(max_examples=100, deadline=None)
@given(
    a=st.lists(_VALUES, min_size=1, max_size=6),
    b=st.lists(_VALUES, min_size=1, max_size=6),
)
def test_two_sided_p_is_symmetric_in_group_order(a, b):
    forward = stats.mann_whitney(a, b, method="exact").p_value
    backward = stats.mann_whitney(b, a, method="exact").p_value
    assert forward == pytest.approx(backward, abs=1e-12)
