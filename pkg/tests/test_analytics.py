from __future__ import annotations

import io

import pytest

from secspect import analytics, technique
from secspect.errors import EmptyGroup, FormatError, KeyMismatch, SessionNotRunning
from tests.conftest import run_walkthrough_session

# Frozen against an independent implementation (rank-sum enumeration and
# pooled-variance arithmetic computed outside this package).
FROZEN_COMPARISONS = {
    ("trial 1", "effectiveness"): (98.0, 0.041000900962080915, 0.9093089374085859,
                                   0.42857142857142855, 0.21428571428571427),
    ("trial 2", "effectiveness"): (12.0, 0.049745990721503014, 3.535533905932737,
                                   0.6428571428571429, 0.2857142857142857),
    ("trial 3", "effectiveness"): (107.0, 0.002235212466373455, 1.7122107492322483,
                                   0.5714285714285714, 0.35714285714285715),
    ("trial 1", "efficiency"): (92.0, 0.09928006556789663, 0.7162470904544769,
                                9.0, 6.0),
    ("trial 2", "efficiency"): (12.0, 0.049745990721503014, 2.9455049063551644,
                                21.42857142857143, 6.0),
    ("trial 3", "efficiency"): (109.5, 0.0014397919173401868, 1.6170851425994826,
                                21.428571428571427, 10.0),
}

FROZEN_DISTRIBUTION = {
    "our_approach": {"O": 86.61, "A": 33.04, "IS": 42.86, "IF": 30.36,
                     "total": 50.77},
    "owasp_only": {"O": 23.08, "A": 26.92, "IS": 36.54, "IF": 15.38,
                   "total": 26.92},
    "pbr_black_hat": {"O": 31.82, "A": 29.55, "IS": 56.82, "IF": 31.82,
                      "total": 38.31},
}


@pytest.fixture(scope="module")
def experiment_key():
    return analytics.load_experiment_key()


@pytest.fixture(scope="module")
def scored_sessions(experiment_key):
    return analytics.load_trial_sessions(key=experiment_key)


def test_experiment_key_shape(experiment_key):
    assert experiment_key.story_ids() == frozenset({"US1", "US2"})
    assert experiment_key.totals_by_type() == {"O": 4, "A": 4, "IS": 4, "IF": 2}
    assert experiment_key.seeded_total() == 14


def test_walkthrough_key_shape():
    key = analytics.load_walkthrough_key()
    assert key.story_ids() == frozenset({"US1"})
    assert key.seeded_total() == 7
    assert key.totals_by_type() == {"O": 2, "A": 2, "IS": 2, "IF": 1}


def test_effectiveness_and_efficiency_functions():
    assert analytics.effectiveness(7, 14) == pytest.approx(0.5)
    assert analytics.efficiency(7, 30.0) == pytest.approx(14.0)
    with pytest.raises(ValueError):
        analytics.effectiveness(1, 0)
    with pytest.raises(ValueError):
        analytics.efficiency(1, 0.0)


def test_walkthrough_session_scores_seven_of_seven(
    walkthrough_package, fake_clock
):
    key = analytics.load_walkthrough_key()
    session, _, _ = run_walkthrough_session(walkthrough_package, fake_clock)
    scored = analytics.score_session(session, key)
    assert scored.tp_instances == 7
    assert scored.fp_instances == 0
    assert scored.effectiveness == pytest.approx(1.0)
    assert scored.efficiency == pytest.approx(15.0)
    assert scored.per_type_found == {"O": 2, "A": 2, "IS": 2, "IF": 1}


def test_one_record_credits_every_matching_seed(walkthrough_package, fake_clock):
    # the key seeds the SS4 ambiguity twice; a single A@SS4 record earns both
    from secspect import session as session_mod

    key = analytics.load_walkthrough_key()
    session = session_mod.start_session(
        walkthrough_package, "solo", "our_approach", clock=fake_clock
    )
    session_mod.record_defect(session, session_mod.DefectRecord("US1", "A", "SS4"))
    fake_clock.advance_minutes(10.0)
    session_mod.finish_session(session)
    scored = analytics.score_session(session, key)
    assert scored.tp_instances == 2
    assert scored.per_type_found == {"O": 0, "A": 2, "IS": 0, "IF": 0}


def test_non_seeded_findings_count_as_false_positives(
    walkthrough_package, fake_clock
):
    from secspect import session as session_mod

    key = analytics.load_walkthrough_key()
    session = session_mod.start_session(
        walkthrough_package, "fp", "our_approach", clock=fake_clock
    )
    session_mod.record_defect(session, session_mod.DefectRecord("US1", "A", "SS1"))
    session_mod.record_defect(
        session,
        session_mod.DefectRecord("US1", "IS", frozenset({"SS2", "SS4", "SS5"})),
    )
    fake_clock.advance_minutes(10.0)
    session_mod.finish_session(session)
    scored = analytics.score_session(session, key)
    assert scored.tp_instances == 0
    # the wrong three-way conflict weighs three instances
    assert scored.fp_instances == 4


def test_inconsistency_requires_exact_set_match(walkthrough_package, fake_clock):
    from secspect import session as session_mod

    key = analytics.load_walkthrough_key()
    session = session_mod.start_session(
        walkthrough_package, "near", "our_approach", clock=fake_clock
    )
    session_mod.record_defect(
        session, session_mod.DefectRecord("US1", "IS", frozenset({"SS2", "SS4"}))
    )
    fake_clock.advance_minutes(5.0)
    session_mod.finish_session(session)
    scored = analytics.score_session(session, key)
    assert scored.tp_instances == 0
    assert scored.fp_instances == 2


def test_scoring_requires_finished_session(walkthrough_package, fake_clock):
    from secspect import session as session_mod

    key = analytics.load_walkthrough_key()
    session = session_mod.start_session(
        walkthrough_package, "open", "our_approach", clock=fake_clock
    )
    with pytest.raises(SessionNotRunning):
        analytics.score_session(session, key)


def test_scoring_rejects_mismatched_key(walkthrough_package, fake_clock):
    session, _, _ = run_walkthrough_session(walkthrough_package, fake_clock)
    with pytest.raises(KeyMismatch):
        analytics.score_session(session, analytics.load_experiment_key())


def test_key_payload_round_trip(experiment_key):
    payload = analytics.key_to_payload(experiment_key)
    assert analytics.key_from_payload(payload) == experiment_key


@pytest.mark.parametrize(
    "text",
    [
        "stories: []",
        "stories:\n  - id: US1\n    seeded:\n      - type: Q\n        location: SS1\n",
        "stories:\n  - id: US1\n    seeded:\n      - type: IS\n        locations: [SS1]\n",
        "stories:\n  - id: US1\n    seeded:\n      - type: O\n",
    ],
)
def test_malformed_keys_rejected(text):
    with pytest.raises(FormatError):
        analytics.load_answer_key(io.StringIO(text))


def test_trial_rows_load_and_validate(scored_sessions):
    rows = analytics.load_trial_rows()
    assert len(rows) == 56
    assert len(scored_sessions) == 56
    by_trial = {}
    for scored in scored_sessions:
        by_trial.setdefault(scored.trial, []).append(scored)
    assert {trial: len(group) for trial, group in sorted(by_trial.items())} == {
        1: 25, 2: 8, 3: 23,
    }


def test_malformed_trial_csv_rejected():
    header = ("id,trial,treatment,time,omission,ambiguity,inconsistency,"
              "incorrect_fact,total,discarded\n")
    with pytest.raises(FormatError):
        analytics.load_trial_rows(io.StringIO("id,trial\n1,1\n"))
    with pytest.raises(FormatError):
        analytics.load_trial_rows(
            io.StringIO(header + "1,1,our_approach,00:30,1,1,1,1,9,false\n")
        )
    with pytest.raises(FormatError):
        analytics.load_trial_rows(
            io.StringIO(header + "1,1,our_approach,0h30,1,1,1,1,4,false\n")
        )
    with pytest.raises(FormatError):
        analytics.load_trial_rows(
            io.StringIO(header + "1,1,placebo,00:30,1,1,1,1,4,false\n")
        )


def test_outlier_filter_matches_flagged_rows(scored_sessions):
    kept, discarded = analytics.filter_outliers(scored_sessions)
    assert sorted(s.inspector_id for s in discarded) == ["15", "26", "47", "8"]
    assert len(kept) == 52
    assert all(s.tp_instances < analytics.OUTLIER_MINIMUM_TP for s in discarded)
    assert all(s.tp_instances >= analytics.OUTLIER_MINIMUM_TP for s in kept)
    flagged = {str(row.id) for row in analytics.load_trial_rows() if row.discarded}
    assert flagged == {s.inspector_id for s in discarded}


def test_trial_comparisons_match_frozen_oracles(scored_sessions, experiment_key):
    report = analytics.build_report(scored_sessions, experiment_key)
    assert len(report.discarded) == 4
    seen = {}
    for row in report.comparisons:
        frozen = FROZEN_COMPARISONS[(row.label, row.metric)]
        u, p, d, median_a, median_b = frozen
        assert row.comparison.u_statistic == pytest.approx(u, abs=1e-12)
        assert row.comparison.p_value == pytest.approx(p, abs=1e-12)
        assert row.comparison.effect_size == pytest.approx(d, abs=1e-12)
        assert row.median_a == pytest.approx(median_a, abs=1e-12)
        assert row.median_b == pytest.approx(median_b, abs=1e-12)
        assert row.comparison.method == "approx"
        seen[(row.label, row.metric)] = True
    assert len(seen) == 6


def test_unfiltered_report_changes_trial_one(scored_sessions, experiment_key):
    report = analytics.build_report(
        scored_sessions, experiment_key, outlier_filter=False
    )
    assert report.discarded == ()
    by_key = {(row.label, row.metric): row for row in report.comparisons}
    unfiltered = by_key[("trial 1", "efficiency")]
    assert unfiltered.comparison.p_value == pytest.approx(
        0.031280024081896486, abs=1e-12
    )
    assert unfiltered.comparison.effect_size == pytest.approx(
        0.8597390301054836, abs=1e-12
    )


def test_treatment_grouping_pools_trials(scored_sessions, experiment_key):
    report = analytics.build_report(
        scored_sessions, experiment_key, group_by="treatment"
    )
    labels = {(row.label, row.treatment_b) for row in report.comparisons}
    assert labels == {
        ("pooled", "owasp_only"),
        ("pooled", "pbr_black_hat"),
    } or all(label == "pooled" for label, _ in labels)
    assert len(report.comparisons) == 4


def test_type_distribution_matches_frozen_shares(scored_sessions, experiment_key):
    kept, _ = analytics.filter_outliers(scored_sessions)
    distribution = analytics.type_distribution(kept, experiment_key)
    assert set(distribution) == set(FROZEN_DISTRIBUTION)
    for treatment, shares in FROZEN_DISTRIBUTION.items():
        for defect_type, share in shares.items():
            assert distribution[treatment][defect_type] == pytest.approx(
                share, abs=0.005
            )


def test_mean_ranking_puts_experimental_groups_first(
    scored_sessions, experiment_key
):
    report = analytics.build_report(scored_sessions, experiment_key)
    treatments = [row.treatment for row in report.means]
    assert treatments[:3] == ["our_approach"] * 3
    rates = [row.mean_defects_per_hour for row in report.means]
    assert rates == sorted(rates, reverse=True)


def test_report_payload_round_trip(scored_sessions, experiment_key):
    report = analytics.build_report(scored_sessions, experiment_key)
    payload = analytics.report_to_payload(report)
    assert analytics.report_from_payload(payload) == report
    with pytest.raises(FormatError):
        analytics.report_from_payload({"bogus": 1})


def test_render_report_is_deterministic(scored_sessions, experiment_key):
    report = analytics.build_report(scored_sessions, experiment_key)
    assert analytics.render_report(report) == analytics.render_report(report)
    assert "| trial 1 | effectiveness |" in analytics.render_report(report)


def test_empty_group_raises(experiment_key):
    our_only = tuple(
        s for s in analytics.load_trial_sessions(key=experiment_key)
        if s.treatment == "our_approach"
    )
    with pytest.raises(EmptyGroup):
        analytics.build_report(our_only, experiment_key)


def test_reference_figures_available():
    reference = analytics.load_reference_figures()
    assert reference["p_values"]["effectiveness"]["1"] == 0.002
    assert reference["effect_sizes"]["efficiency"]["2"] == 3.29
    assert reference["distribution"]["owasp_only"]["O"] == 23.2


def test_reproduce_bundle(scored_sessions, experiment_key):
    result = analytics.reproduce()
    assert set(result) == {
        "report", "unfiltered", "deviations", "computed_ranking",
        "reference_ranking",
    }
    assert len(result["report"].discarded) == 4
    text = analytics.render_reproduction(result)
    assert "Computed vs reference figures" in text
    assert text == analytics.render_reproduction(analytics.reproduce())


def test_scored_payload_round_trip(scored_sessions):
    scored = scored_sessions[0]
    assert analytics.scored_from_payload(analytics.scored_to_payload(scored)) == scored
