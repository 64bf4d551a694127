"""Timed inspection sessions: record defects against a technique package.

A session walks created -> running -> finished. Defects are mutable only
while running; finishing freezes the session and materializes one filled
defect reporting form per story. Time comes from an injectable clock so the
session logic stays testable; the default is wall-clock time.
"""

from __future__ import annotations

import itertools
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

from .errors import (
    AlreadyStarted,
    DuplicateRecord,
    MalformedInconsistency,
    SessionNotRunning,
    UnknownLocation,
)
from .technique import DefectReportingForm, TechniquePackage

TREATMENTS = ("our_approach", "owasp_only", "pbr_black_hat")

DEFAULT_SOFT_LIMIT_MINUTES = 60.0

_session_counter = itertools.count(1)


class TimeLimitWarning(UserWarning):
    """The session has run past its soft time limit."""


@dataclass(frozen=True)
class DefectRecord:
    story_id: str
    defect_type: str  # O | A | IS | IF
    location: Union[str, frozenset]  # SR id for O; SS id for A/IF; SS set for IS
    note: str = ""

    def __post_init__(self):
        if self.defect_type == "IS" and not isinstance(self.location, frozenset):
            object.__setattr__(self, "location", frozenset(self.location))

    def instances(self) -> int:
        """Defect instances this record stands for (conflict set size for IS)."""
        if self.defect_type == "IS":
            return len(self.location)
        return 1


@dataclass
class InspectionSession:
    package: TechniquePackage
    inspector_id: str
    treatment: str
    session_id: str = ""
    state: str = "created"  # created | running | finished
    started_at: Optional[float] = None
    finished_at: Optional[float] = None
    defects: list = field(default_factory=list)
    soft_limit_minutes: float = DEFAULT_SOFT_LIMIT_MINUTES
    clock: Callable[[], float] = field(default=time.time, compare=False, repr=False)

    def elapsed_minutes(self) -> float:
        if self.started_at is None:
            return 0.0
        end = self.finished_at if self.finished_at is not None else self.clock()
        return max(end - self.started_at, 0.0) / 60.0

    def duration_minutes(self) -> float:
        if self.state != "finished":
            raise SessionNotRunning("session %s is not finished" % self.session_id)
        return (self.finished_at - self.started_at) / 60.0


def start_session(
    package: TechniquePackage,
    inspector_id: str,
    treatment: str,
    clock: Optional[Callable[[], float]] = None,
    session_id: Optional[str] = None,
    soft_limit_minutes: float = DEFAULT_SOFT_LIMIT_MINUTES,
) -> InspectionSession:
    """Create a session and start its timer."""
    if treatment not in TREATMENTS:
        raise ValueError("treatment must be one of %s" % list(TREATMENTS))
    session = InspectionSession(
        package=package,
        inspector_id=inspector_id,
        treatment=treatment,
        session_id=session_id or "session-%d" % next(_session_counter),
        clock=clock or time.time,
        soft_limit_minutes=soft_limit_minutes,
    )
    start(session)
    return session


def start(session: InspectionSession) -> InspectionSession:
    if session.state != "created":
        raise AlreadyStarted("session %s already started" % session.session_id)
    session.state = "running"
    session.started_at = session.clock()
    return session


def _check_running(session):
    if session.state != "running":
        raise SessionNotRunning(
            "session %s is %s, not running" % (session.session_id, session.state)
        )


def _warn_if_over_limit(session):
    if session.elapsed_minutes() > session.soft_limit_minutes:
        warnings.warn(
            "session %s has exceeded the %g-minute soft limit"
            % (session.session_id, session.soft_limit_minutes),
            TimeLimitWarning,
            stacklevel=3,
        )


def _validate_record(session, record: DefectRecord):
    try:
        item = session.package.item_for(record.story_id)
    except KeyError:
        raise UnknownLocation(
            "story %r is not part of the package" % record.story_id
        ) from None
    spec_ids = {
        spec.id for spec in session.package.document.specs_for(record.story_id)
    }
    if record.defect_type == "O":
        if record.location not in item.form.row_ids():
            raise UnknownLocation(
                "omission location %r is not a requirement row of story %s"
                % (record.location, record.story_id)
            )
    elif record.defect_type in ("A", "IF"):
        if record.location not in spec_ids:
            raise UnknownLocation(
                "location %r is not a specification of story %s"
                % (record.location, record.story_id)
            )
    elif record.defect_type == "IS":
        if len(record.location) < 2:
            raise MalformedInconsistency(
                "an inconsistency names at least two specifications"
            )
        missing = set(record.location) - spec_ids
        if missing:
            raise UnknownLocation(
                "specifications %s are not part of story %s"
                % (sorted(missing), record.story_id)
            )
    else:
        raise ValueError("unknown defect type %r" % record.defect_type)
    for existing in session.defects:
        if (
            existing.story_id == record.story_id
            and existing.defect_type == record.defect_type
            and existing.location == record.location
        ):
            raise DuplicateRecord(
                "defect %s at %s already recorded"
                % (record.defect_type, record.location)
            )


def record_defect(session: InspectionSession, record: DefectRecord) -> InspectionSession:
    """Validate and append one defect record to a running session."""
    _check_running(session)
    _validate_record(session, record)
    session.defects.append(record)
    _warn_if_over_limit(session)
    return session


def delete_defect(session: InspectionSession, index: int) -> DefectRecord:
    """Remove a previously recorded defect by position (running sessions only)."""
    _check_running(session)
    if not 0 <= index < len(session.defects):
        raise IndexError("no defect record at index %d" % index)
    return session.defects.pop(index)


def _filled_form(session, story_id) -> DefectReportingForm:
    empty = session.package.item_for(story_id).form
    records = [r for r in session.defects if r.story_id == story_id]
    return replace(
        empty,
        omission_marks=tuple(
            r.location for r in records if r.defect_type == "O"
        ),
        ambiguity_entries=tuple(
            r.location for r in records if r.defect_type == "A"
        ),
        inconsistency_entries=tuple(
            r.location for r in records if r.defect_type == "IS"
        ),
        incorrect_fact_entries=tuple(
            r.location for r in records if r.defect_type == "IF"
        ),
    )


def finish_session(session: InspectionSession):
    """Stop the timer and freeze the session.

    Returns ``(forms, duration_minutes)`` with one filled form per story in
    document order. The end timestamp is clamped so the duration is always
    strictly positive.
    """
    _check_running(session)
    _warn_if_over_limit(session)
    end = session.clock()
    if end <= session.started_at:
        end = session.started_at + 1e-6
    session.finished_at = end
    session.state = "finished"
    forms = tuple(
        _filled_form(session, story_id) for story_id in session.package.story_ids()
    )
    return forms, session.duration_minutes()


def filled_forms(session: InspectionSession) -> tuple:
    """Filled forms of a finished session (same shape finish_session returned)."""
    if session.state != "finished":
        raise SessionNotRunning("session %s is not finished" % session.session_id)
    return tuple(
        _filled_form(session, story_id) for story_id in session.package.story_ids()
    )


# ---------------------------------------------------------------------------
# serialization


def record_to_payload(record: DefectRecord) -> dict:
    location = (
        sorted(record.location)
        if isinstance(record.location, frozenset)
        else record.location
    )
    return {
        "story_id": record.story_id,
        "defect_type": record.defect_type,
        "location": location,
        "note": record.note,
    }


def record_from_payload(payload: dict) -> DefectRecord:
    location = payload["location"]
    if isinstance(location, list):
        location = frozenset(location)
    return DefectRecord(
        story_id=payload["story_id"],
        defect_type=payload["defect_type"],
        location=location,
        note=payload.get("note", ""),
    )


def session_to_payload(session: InspectionSession) -> dict:
    from .technique import package_to_payload

    return {
        "session_id": session.session_id,
        "package": package_to_payload(session.package),
        "inspector_id": session.inspector_id,
        "treatment": session.treatment,
        "state": session.state,
        "started_at": session.started_at,
        "finished_at": session.finished_at,
        "defects": [record_to_payload(r) for r in session.defects],
        "soft_limit_minutes": session.soft_limit_minutes,
    }


def session_from_payload(payload: dict) -> InspectionSession:
    from .errors import FormatError
    from .technique import package_from_payload

    expected = {
        "session_id", "package", "inspector_id", "treatment", "state",
        "started_at", "finished_at", "defects", "soft_limit_minutes",
    }
    if not isinstance(payload, dict) or set(payload) != expected:
        raise FormatError("session payload must have keys %s" % sorted(expected))
    if payload["state"] not in ("created", "running", "finished"):
        raise FormatError("unknown session state %r" % payload["state"])
    return InspectionSession(
        package=package_from_payload(payload["package"]),
        inspector_id=payload["inspector_id"],
        treatment=payload["treatment"],
        session_id=payload["session_id"],
        state=payload["state"],
        started_at=payload["started_at"],
        finished_at=payload["finished_at"],
        defects=[record_from_payload(r) for r in payload["defects"]],
        soft_limit_minutes=payload["soft_limit_minutes"],
    )
