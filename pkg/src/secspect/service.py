"""HTTP service exposing document intake, package generation, inspection
sessions, and group analysis.

State lives in memory; an optional snapshot directory persists each session
after every mutation so a restarted server can be reseeded by hand. All
domain failures surface as ``{"error": {"code", "message"}}`` envelopes with
a status derived from the error code; stack traces never reach the client.
"""

from __future__ import annotations

import itertools
import threading
import warnings
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import analytics, catalog, corpus, persistence, session as session_mod
from . import technique
from .errors import EmptyGroup, FormatError, SecspectError
from .session import TimeLimitWarning


class NotFound(SecspectError):
    code = "NOT_FOUND"


_STATUS_BY_CODE = {
    "NOT_FOUND": 404,
    "ALREADY_STARTED": 409,
    "SESSION_NOT_RUNNING": 409,
    "DUPLICATE_RECORD": 409,
}


def _status_for(error: SecspectError) -> int:
    return _STATUS_BY_CODE.get(error.code, 422)


def _require(payload, key, kind=None):
    if not isinstance(payload, dict) or key not in payload:
        raise FormatError("missing field %r" % key)
    value = payload[key]
    if kind is not None and not isinstance(value, kind):
        raise FormatError("field %r has the wrong type" % key)
    return value


class _Store:
    """Mutable app state: documents, packages, sessions, and their locks."""

    def __init__(self, snapshot_dir=None, clock=None):
        self.documents = {}
        self.packages = {}
        self.sessions = {}
        self.locks = {}
        self.registry_lock = threading.Lock()
        self.counters = {
            "document": itertools.count(1),
            "package": itertools.count(1),
            "session": itertools.count(1),
        }
        self.snapshot_dir = snapshot_dir
        self.clock = clock

    def new_id(self, kind: str) -> str:
        return "%s-%d" % (kind, next(self.counters[kind]))

    def session_lock(self, session_id: str) -> threading.Lock:
        with self.registry_lock:
            if session_id not in self.sessions:
                raise NotFound("no session %r" % session_id)
            return self.locks[session_id]

    def snapshot(self, session) -> None:
        if self.snapshot_dir is None:
            return
        import os

        persistence.save_file(
            session, os.path.join(self.snapshot_dir, "%s.json" % session.session_id)
        )


_REQUIREMENTS_BY_ID = {req.id: req for req in catalog.REQUIREMENTS}


def _story_view(document, item) -> dict:
    story = next(s for s in document.stories if s.id == item.story_id)
    return {
        "id": story.id,
        "text": story.raw_text,
        "role": story.role,
        "feature": story.feature,
        "reason": story.reason,
        "specs": [
            {"id": spec.id, "text": spec.text}
            for spec in document.specs_for(story.id)
        ],
        "extraction": {
            "verbs": list(item.extraction.feature_verbs),
            "nouns": list(item.extraction.reason_nouns),
            "unmatched": list(item.extraction.unmatched_tokens),
        },
        "properties": [
            p for p in catalog.PROPERTY_ORDER if p in item.properties
        ],
        "rows": [
            {
                "id": row_id,
                "text": text,
                "emphasis": list(_REQUIREMENTS_BY_ID[row_id].emphasis),
            }
            for row_id, text in item.form.rows
        ],
    }


def _package_view(package_id, package) -> dict:
    return {
        "package_id": package_id,
        "stories": [
            _story_view(package.document, item) for item in package.items
        ],
        "questions": [
            {"defect_type": q.defect_type, "text": q.text}
            for q in package.questions
        ],
        "lexicon_source": package.lexicon_source,
        "lexicon_size": package.lexicon_size,
    }


def _record_view(index, record) -> dict:
    location = (
        sorted(record.location)
        if isinstance(record.location, frozenset)
        else record.location
    )
    return {
        "index": index,
        "story_id": record.story_id,
        "defect_type": record.defect_type,
        "location": location,
        "note": record.note,
    }


def _session_view(store, session_id, session) -> dict:
    package_id = getattr(session, "_service_package_id", None)
    elapsed = session.elapsed_minutes()
    view = {
        "session_id": session_id,
        "package_id": package_id,
        "inspector_id": session.inspector_id,
        "treatment": session.treatment,
        "state": session.state,
        "elapsed_minutes": elapsed,
        "soft_limit_minutes": session.soft_limit_minutes,
        "over_soft_limit": elapsed > session.soft_limit_minutes,
        "defects": [
            _record_view(i, r) for i, r in enumerate(session.defects)
        ],
        "record_count": len(session.defects),
        "defect_tally": sum(r.instances() for r in session.defects),
        "duration_minutes": (
            session.duration_minutes() if session.state == "finished" else None
        ),
    }
    return view


def _finish_view(session, forms, duration) -> dict:
    return {
        "forms": [technique.form_to_payload(form) for form in forms],
        "rendered": [technique.render_form(form) for form in forms],
        "duration_minutes": duration,
        "record_count": len(session.defects),
        "defect_tally": sum(r.instances() for r in session.defects),
    }


def _sessions_for_analysis(store, session_ids, key):
    scored = []
    for session_id in session_ids:
        with store.registry_lock:
            session = store.sessions.get(session_id)
        if session is None:
            raise NotFound("no session %r" % session_id)
        scored.append(analytics.score_session(session, key))
    if not scored:
        raise EmptyGroup("no sessions named for analysis")
    return tuple(scored)


def create_app(snapshot_dir: Optional[str] = None, clock=None) -> FastAPI:
    """Build the service app. ``clock`` overrides session timing in tests."""
    app = FastAPI(title="secspect", docs_url=None, redoc_url=None)
    store = _Store(snapshot_dir=snapshot_dir, clock=clock)
    app.state.store = store

    @app.exception_handler(SecspectError)
    async def _domain_error(request: Request, exc: SecspectError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": {"code": exc.code, "message": str(exc)}},
        )

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=422,
            content={"error": {"code": "INVALID", "message": str(exc)}},
        )

    @app.get("/catalog")
    def get_catalog():
        return {
            "properties": [
                {
                    "code": p.code,
                    "name": p.name,
                    "description": p.description,
                }
                for p in catalog.PROPERTIES
            ],
            "requirements": [
                {
                    "id": r.id,
                    "property": r.property,
                    "canonical_text": r.canonical_text,
                    "text": catalog.render_rewritten(r),
                    "emphasis": list(r.emphasis),
                }
                for r in catalog.REQUIREMENTS
            ],
            "questions": [
                {"defect_type": q.defect_type, "text": q.text}
                for q in technique.VERIFICATION_QUESTIONS
            ],
            "defect_types": [
                {
                    "id": d,
                    "name": technique.DEFECT_TYPE_NAMES[d],
                    "definition": technique.DEFECT_TYPE_DEFINITIONS[d],
                }
                for d in technique.DEFECT_TYPES
            ],
        }

    @app.post("/documents", status_code=201)
    def create_document(payload: dict):
        document = corpus.document_from_payload(payload)
        with store.registry_lock:
            document_id = store.new_id("document")
            store.documents[document_id] = document
        return {"document_id": document_id, "story_ids": list(document.story_ids())}

    @app.get("/documents/{document_id}")
    def get_document(document_id: str):
        with store.registry_lock:
            document = store.documents.get(document_id)
        if document is None:
            raise NotFound("no document %r" % document_id)
        return corpus.document_to_payload(document)

    @app.post("/packages", status_code=201)
    def create_package(payload: dict):
        document_id = _require(payload, "document_id", str)
        lexicon_id = payload.get("lexicon_id", "builtin")
        if lexicon_id != "builtin":
            raise FormatError("only the builtin lexicon is served")
        with store.registry_lock:
            document = store.documents.get(document_id)
        if document is None:
            raise NotFound("no document %r" % document_id)
        package = technique.generate_package(document)
        with store.registry_lock:
            package_id = store.new_id("package")
            store.packages[package_id] = package
        return _package_view(package_id, package)

    @app.get("/packages/{package_id}")
    def get_package(package_id: str):
        with store.registry_lock:
            package = store.packages.get(package_id)
        if package is None:
            raise NotFound("no package %r" % package_id)
        return _package_view(package_id, package)

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict):
        package_id = _require(payload, "package_id", str)
        inspector_id = _require(payload, "inspector_id", str)
        treatment = payload.get("treatment", "our_approach")
        with store.registry_lock:
            package = store.packages.get(package_id)
        if package is None:
            raise NotFound("no package %r" % package_id)
        with store.registry_lock:
            session_id = store.new_id("session")
        session = session_mod.start_session(
            package,
            inspector_id,
            treatment,
            clock=store.clock,
            session_id=session_id,
        )
        session._service_package_id = package_id
        with store.registry_lock:
            store.sessions[session_id] = session
            store.locks[session_id] = threading.Lock()
        store.snapshot(session)
        return _session_view(store, session_id, session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        lock = store.session_lock(session_id)
        with lock:
            return _session_view(store, session_id, store.sessions[session_id])

    @app.post("/sessions/{session_id}/defects", status_code=201)
    def add_defect(session_id: str, payload: dict):
        record = session_mod.record_from_payload(
            {
                "story_id": _require(payload, "story_id", str),
                "defect_type": _require(payload, "defect_type", str),
                "location": _require(payload, "location"),
                "note": payload.get("note", ""),
            }
        )
        lock = store.session_lock(session_id)
        with lock:
            session = store.sessions[session_id]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TimeLimitWarning)
                session_mod.record_defect(session, record)
            store.snapshot(session)
            index = len(session.defects) - 1
            return _record_view(index, session.defects[index])

    @app.delete("/sessions/{session_id}/defects/{index}")
    def remove_defect(session_id: str, index: int):
        lock = store.session_lock(session_id)
        with lock:
            session = store.sessions[session_id]
            try:
                removed = session_mod.delete_defect(session, index)
            except IndexError:
                raise NotFound(
                    "no defect record %d in session %s" % (index, session_id)
                ) from None
            store.snapshot(session)
            return {"removed": _record_view(index, removed)}

    @app.post("/sessions/{session_id}/finish")
    def finish(session_id: str):
        lock = store.session_lock(session_id)
        with lock:
            session = store.sessions[session_id]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TimeLimitWarning)
                forms, duration = session_mod.finish_session(session)
            store.snapshot(session)
            return _finish_view(session, forms, duration)

    @app.post("/analyses")
    def run_analysis(payload: dict):
        source = payload.get("source", "bundled")
        key_ref = payload.get("key", "bundled")
        if isinstance(key_ref, dict):
            key = analytics.key_from_payload(key_ref)
        elif key_ref == "bundled":
            key = analytics.load_experiment_key()
        else:
            raise FormatError("key must be 'bundled' or an inline key payload")
        alpha = payload.get("alpha", 0.05)
        if not isinstance(alpha, (int, float)):
            raise FormatError("alpha must be a number")
        outlier_filter = payload.get("outlier_filter", True)
        if source == "bundled":
            scored = analytics.load_trial_sessions(key=key)
            default_group = "trial"
        elif isinstance(source, dict) and "session_ids" in source:
            scored = _sessions_for_analysis(store, source["session_ids"], key)
            default_group = "treatment"
        else:
            raise FormatError(
                "source must be 'bundled' or {'session_ids': [...]}"
            )
        group_by = payload.get("group_by", default_group)
        report = analytics.build_report(
            scored,
            key,
            group_by=group_by,
            alpha=float(alpha),
            outlier_filter=bool(outlier_filter),
        )
        return {
            "report": analytics.report_to_payload(report),
            "rendered": analytics.render_report(report),
        }

    return app
