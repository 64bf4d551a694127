from __future__ import annotations

import pytest

from secspect import corpus, session as session_mod, technique


class FakeClock:
    """Deterministic clock for session timing tests (seconds)."""

    def __init__(self, now: float = 0.0):
        self.now = now

    def __call__(self) -> float:
        return self.now

    def advance_minutes(self, minutes: float) -> None:
        self.now += minutes * 60.0


WALKTHROUGH_FINDINGS = (
    ("US1", "O", "C2"),
    ("US1", "O", "C4"),
    ("US1", "A", "SS4"),
    ("US1", "IS", frozenset({"SS2", "SS3"})),
    ("US1", "IF", "SS5"),
)


@pytest.fixture
def walkthrough_document():
    return corpus.load_walkthrough_document()


@pytest.fixture
def walkthrough_package(walkthrough_document):
    return technique.generate_package(walkthrough_document)


@pytest.fixture
def fake_clock():
    return FakeClock()


def run_walkthrough_session(package, clock, inspector_id="inspector-1",
                            minutes=28.0):
    """Record the five reference findings and finish after ``minutes``."""
    session = session_mod.start_session(
        package, inspector_id, "our_approach", clock=clock
    )
    for story_id, defect_type, location in WALKTHROUGH_FINDINGS:
        session_mod.record_defect(
            session, session_mod.DefectRecord(story_id, defect_type, location)
        )
    clock.advance_minutes(minutes)
    forms, duration = session_mod.finish_session(session)
    return session, forms, duration
