"""Canonical artifact serialization with versioned, digest-checked envelopes.

Every artifact kind (document, lexicon, package, session, key, report) is
saved as one JSON envelope::

    {"schema_version": 1, "artifact_kind": "...", "payload": {...},
     "content_digest": "sha256:..."}

The byte form is canonical (sorted keys, fixed separators, ASCII escapes,
trailing newline), so identical artifacts always serialize to identical
bytes. The digest is SHA-256 over the canonical bytes of the envelope
without its ``content_digest`` field. Unknown schema versions are rejected,
never migrated; tampered payloads fail the digest check.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from typing import Union

from . import analytics, catalog, corpus, session, technique
from .errors import DigestMismatch, FormatError, SchemaVersionError

SCHEMA_VERSION = 1

_CODECS = {
    "document": (
        corpus.SpecificationDocument,
        corpus.document_to_payload,
        corpus.document_from_payload,
    ),
    "lexicon": (
        catalog.Lexicon,
        catalog.lexicon_to_payload,
        catalog.lexicon_from_payload,
    ),
    "package": (
        technique.TechniquePackage,
        technique.package_to_payload,
        technique.package_from_payload,
    ),
    "session": (
        session.InspectionSession,
        session.session_to_payload,
        session.session_from_payload,
    ),
    "key": (
        analytics.AnswerKey,
        analytics.key_to_payload,
        analytics.key_from_payload,
    ),
    "report": (
        analytics.MetricsReport,
        analytics.report_to_payload,
        analytics.report_from_payload,
    ),
}

ARTIFACT_KINDS = tuple(_CODECS)


def canonical_bytes(obj) -> bytes:
    """Deterministic JSON byte form: sorted keys, compact, ASCII, newline."""
    return (
        json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
        + "\n"
    ).encode("ascii")


def content_digest(artifact_kind: str, payload) -> str:
    body = canonical_bytes(
        {
            "artifact_kind": artifact_kind,
            "payload": payload,
            "schema_version": SCHEMA_VERSION,
        }
    )
    return "sha256:" + hashlib.sha256(body).hexdigest()


def kind_of(artifact) -> str:
    for kind, (cls, _, _) in _CODECS.items():
        if isinstance(artifact, cls):
            return kind
    raise TypeError("no artifact kind registered for %r" % type(artifact).__name__)


def save(artifact) -> bytes:
    """Serialize an artifact into canonical envelope bytes."""
    kind = kind_of(artifact)
    _, to_payload, _ = _CODECS[kind]
    payload = to_payload(artifact)
    envelope = {
        "schema_version": SCHEMA_VERSION,
        "artifact_kind": kind,
        "payload": payload,
        "content_digest": content_digest(kind, payload),
    }
    return canonical_bytes(envelope)


def load(data: Union[bytes, str]):
    """Parse envelope bytes back into the artifact they carry."""
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    try:
        envelope = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError("envelope is not valid JSON: %s" % exc) from None
    expected = {"schema_version", "artifact_kind", "payload", "content_digest"}
    if not isinstance(envelope, dict) or set(envelope) != expected:
        raise FormatError("envelope must have keys %s" % sorted(expected))
    if envelope["schema_version"] != SCHEMA_VERSION:
        raise SchemaVersionError(
            "schema version %r is not readable by this build (expected %d)"
            % (envelope["schema_version"], SCHEMA_VERSION)
        )
    kind = envelope["artifact_kind"]
    if kind not in _CODECS:
        raise FormatError("unknown artifact kind %r" % kind)
    expected_digest = content_digest(kind, envelope["payload"])
    if envelope["content_digest"] != expected_digest:
        raise DigestMismatch(
            "payload does not match its content digest (%s artifact)" % kind
        )
    _, _, from_payload = _CODECS[kind]
    return from_payload(envelope["payload"])


def save_file(artifact, path: str) -> None:
    """Atomic envelope write: the target never holds a partial file."""
    write_bytes_atomic(save(artifact), path)


def load_file(path: str):
    with open(path, "rb") as handle:
        return load(handle.read())


def write_bytes_atomic(data: bytes, path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    descriptor, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(descriptor, "wb") as handle:
            handle.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def write_text_atomic(text: str, path: str) -> None:
    write_bytes_atomic(text.encode("utf-8"), path)
