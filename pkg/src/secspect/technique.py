"""Reading-technique package generation and defect reporting forms.

Phase 1 of the approach: for every story, extract keywords, map security
properties, link the OWASP high-level requirements, and lay out the defect
reporting form (requirement rows against the four defect-type columns).
Baseline checklists for comparative studies (OWASP-only and perspective-based
reading with a black-hat section) live here as static assets.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .catalog import (
    PROPERTY_ORDER,
    REQUIREMENT_BY_ID,
    REQUIREMENTS,
    Lexicon,
    builtin_lexicon,
    link_requirements,
    map_properties,
    render_rewritten,
)
from .corpus import SpecificationDocument
from .errors import FormatError
from .extraction import ExtractionResult, extract_keywords

DEFECT_TYPES = ("O", "A", "IS", "IF")

DEFECT_TYPE_NAMES = {
    "O": "Omission",
    "A": "Ambiguity",
    "IS": "Inconsistency",
    "IF": "Incorrect Fact",
}

DEFECT_TYPE_DEFINITIONS = {
    "O": (
        "Necessary information about the system has been omitted from the "
        "software artifact."
    ),
    "A": (
        "A requirement has multiple interpretations due to multiple terms "
        "for the same characteristic."
    ),
    "IS": "Two or more requirements are in conflict.",
    "IF": (
        "A requirement asserts a fact that cannot be true under the "
        "conditions specified for the system."
    ),
}


@dataclass(frozen=True)
class VerificationQuestion:
    defect_type: str
    text: str


VERIFICATION_QUESTIONS = (
    VerificationQuestion(
        "O",
        "When comparing the security specifications with the OWASP high-level "
        "SRs, are there high-level SRs or characteristics that were not "
        "specified?",
    ),
    VerificationQuestion(
        "A",
        "Does any security specification allow for multiple interpretations?",
    ),
    VerificationQuestion(
        "IS",
        "Are there two or more security specifications in conflict?",
    ),
    VerificationQuestion(
        "IF",
        "Is there any security specification stating information that is not "
        "true under the conditions specified?",
    ),
)


def _spec_ordinal(spec_id):
    return int(spec_id[2:]) if re.match(r"^SS[0-9]+$", spec_id) else 0


@dataclass(frozen=True)
class DefectReportingForm:
    """Per-story grid: requirement rows, one omission cell per row, and
    row-independent ambiguity / inconsistency / incorrect-fact entries that
    reference specification ids."""

    story_id: str
    properties: tuple  # ordered property codes
    rows: tuple  # (requirement id, rewritten text) pairs
    omission_marks: tuple = ()  # requirement ids marked in the O column
    ambiguity_entries: tuple = ()  # SS ids
    inconsistency_entries: tuple = ()  # frozensets of SS ids, each of size >= 2
    incorrect_fact_entries: tuple = ()  # SS ids

    def __post_init__(self):
        row_order = {row_id: index for index, (row_id, _) in enumerate(self.rows)}
        object.__setattr__(
            self,
            "omission_marks",
            tuple(sorted(self.omission_marks, key=lambda r: row_order.get(r, -1))),
        )
        object.__setattr__(
            self, "ambiguity_entries",
            tuple(sorted(self.ambiguity_entries, key=_spec_ordinal)),
        )
        object.__setattr__(
            self,
            "inconsistency_entries",
            tuple(
                sorted(
                    (frozenset(group) for group in self.inconsistency_entries),
                    key=lambda g: sorted(_spec_ordinal(s) for s in g),
                )
            ),
        )
        object.__setattr__(
            self, "incorrect_fact_entries",
            tuple(sorted(self.incorrect_fact_entries, key=_spec_ordinal)),
        )

    def record_count(self) -> int:
        """Number of entries on the form (one inconsistency set = one entry)."""
        return (
            len(self.omission_marks)
            + len(self.ambiguity_entries)
            + len(self.inconsistency_entries)
            + len(self.incorrect_fact_entries)
        )

    def defect_tally(self) -> int:
        """Defect count with each inconsistency set weighted by its size."""
        return (
            len(self.omission_marks)
            + len(self.ambiguity_entries)
            + sum(len(group) for group in self.inconsistency_entries)
            + len(self.incorrect_fact_entries)
        )

    def row_ids(self) -> tuple:
        return tuple(row_id for row_id, _ in self.rows)


@dataclass(frozen=True)
class PackageItem:
    story_id: str
    extraction: ExtractionResult
    properties: tuple
    form: DefectReportingForm


@dataclass(frozen=True)
class TechniquePackage:
    document: SpecificationDocument
    items: tuple
    questions: tuple = VERIFICATION_QUESTIONS
    lexicon_source: str = "bundled"
    lexicon_size: int = 0
    generated_at: Optional[str] = None  # ISO timestamp; omitted by default

    def item_for(self, story_id: str) -> PackageItem:
        for item in self.items:
            if item.story_id == story_id:
                return item
        raise KeyError(story_id)

    def story_ids(self) -> tuple:
        return tuple(item.story_id for item in self.items)


def empty_form(story_id: str, properties) -> DefectReportingForm:
    ordered = tuple(code for code in PROPERTY_ORDER if code in set(properties))
    rows = tuple(
        (req.id, render_rewritten(req)) for req in link_requirements(ordered)
    )
    return DefectReportingForm(story_id=story_id, properties=ordered, rows=rows)


def generate_package(
    document: SpecificationDocument,
    lexicon: Optional[Lexicon] = None,
    generated_at: Optional[str] = None,
) -> TechniquePackage:
    """Extract, map, link, and lay out one form per story.

    Pure function of (document, lexicon): identical inputs always yield an
    identical package. Stories without lexicon matches fall back to all four
    properties; stories without specifications still get full forms.
    """
    if lexicon is None:
        lexicon = builtin_lexicon()
    items = []
    for story in document.stories:
        extraction = extract_keywords(story, lexicon)
        codes = map_properties(extraction, lexicon)
        ordered = tuple(code for code in PROPERTY_ORDER if code in codes)
        items.append(
            PackageItem(
                story_id=story.id,
                extraction=extraction,
                properties=ordered,
                form=empty_form(story.id, ordered),
            )
        )
    return TechniquePackage(
        document=document,
        items=tuple(items),
        lexicon_source=lexicon.source,
        lexicon_size=len(lexicon.entries),
        generated_at=generated_at,
    )


# ---------------------------------------------------------------------------
# form rendering

_HEADER = "| US | Security Property | OWASP High-Level SRs | O | A | IS | IF |"
_RULE = "| --- | --- | --- | --- | --- | --- | --- |"


def form_to_payload(form: DefectReportingForm) -> dict:
    return {
        "story_id": form.story_id,
        "properties": list(form.properties),
        "rows": [{"id": row_id, "text": text} for row_id, text in form.rows],
        "omission": list(form.omission_marks),
        "ambiguity": list(form.ambiguity_entries),
        "inconsistency": [sorted(group, key=_spec_ordinal)
                          for group in form.inconsistency_entries],
        "incorrect_fact": list(form.incorrect_fact_entries),
    }


def form_from_payload(payload: dict) -> DefectReportingForm:
    expected = {
        "story_id", "properties", "rows", "omission", "ambiguity",
        "inconsistency", "incorrect_fact",
    }
    if not isinstance(payload, dict) or set(payload) != expected:
        raise FormatError("form payload must have keys %s" % sorted(expected))
    return DefectReportingForm(
        story_id=payload["story_id"],
        properties=tuple(payload["properties"]),
        rows=tuple((row["id"], row["text"]) for row in payload["rows"]),
        omission_marks=tuple(payload["omission"]),
        ambiguity_entries=tuple(payload["ambiguity"]),
        inconsistency_entries=tuple(
            frozenset(group) for group in payload["inconsistency"]
        ),
        incorrect_fact_entries=tuple(payload["incorrect_fact"]),
    )


def render_form(form: DefectReportingForm, format: str = "document"):
    """Render a form as a text grid (``document``) or payload (``machine``).

    The document grid mirrors the review-form layout: one line per
    requirement row with its omission cell, and the row-independent A/IS/IF
    entries carried on the first line. ``parse_form_document`` inverts it.
    """
    if format == "machine":
        return form_to_payload(form)
    if format != "document":
        raise ValueError("format must be 'document' or 'machine'")
    lines = [_HEADER, _RULE]
    ambiguity = ", ".join(form.ambiguity_entries)
    inconsistency = "; ".join(
        "+".join(sorted(group, key=_spec_ordinal))
        for group in form.inconsistency_entries
    )
    incorrect = ", ".join(form.incorrect_fact_entries)
    marked = set(form.omission_marks)
    for index, (row_id, text) in enumerate(form.rows):
        cells = (
            form.story_id,
            "+".join(form.properties),
            "%s: %s" % (row_id, text),
            "X" if row_id in marked else "",
            ambiguity if index == 0 else "",
            inconsistency if index == 0 else "",
            incorrect if index == 0 else "",
        )
        lines.append("| %s |" % " | ".join(cells))
    return "\n".join(lines) + "\n"


def _split_row(line, locus):
    stripped = line.strip()
    if not stripped.startswith("|") or not stripped.endswith("|"):
        raise FormatError("%s: grid rows must be pipe-delimited" % locus)
    cells = [cell.strip() for cell in stripped[1:-1].split("|")]
    if len(cells) != 7:
        raise FormatError("%s: expected 7 cells, got %d" % (locus, len(cells)))
    return cells


def parse_form_document(text: str) -> DefectReportingForm:
    """Parse a document-format grid back into a form (strict)."""
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) < 3 or lines[0].strip() != _HEADER or lines[1].strip() != _RULE:
        raise FormatError("form document must start with the grid header")
    story_id = None
    properties = None
    rows = []
    omission = []
    ambiguity: tuple = ()
    inconsistency: tuple = ()
    incorrect: tuple = ()
    for index, line in enumerate(lines[2:]):
        locus = "row %d" % (index + 1)
        cells = _split_row(line, locus)
        us, props, requirement, o_cell, a_cell, is_cell, if_cell = cells
        if story_id is None:
            story_id = us
            properties = tuple(props.split("+"))
        elif us != story_id or tuple(props.split("+")) != properties:
            raise FormatError("%s: inconsistent story or property cells" % locus)
        if ": " not in requirement:
            raise FormatError("%s: requirement cell must be 'ID: text'" % locus)
        row_id, row_text = requirement.split(": ", 1)
        known = REQUIREMENT_BY_ID.get(row_id)
        if known is None or render_rewritten(known) != row_text:
            raise FormatError("%s: unknown requirement row %r" % (locus, row_id))
        rows.append((row_id, row_text))
        if o_cell == "X":
            omission.append(row_id)
        elif o_cell:
            raise FormatError("%s: omission cell must be 'X' or empty" % locus)
        if index == 0:
            if a_cell:
                ambiguity = tuple(part.strip() for part in a_cell.split(","))
            if is_cell:
                inconsistency = tuple(
                    frozenset(part.strip().split("+"))
                    for part in is_cell.split(";")
                )
            if if_cell:
                incorrect = tuple(part.strip() for part in if_cell.split(","))
        elif a_cell or is_cell or if_cell:
            raise FormatError("%s: A/IS/IF entries belong on the first row" % locus)
    if story_id is None:
        raise FormatError("form document has no rows")
    return DefectReportingForm(
        story_id=story_id,
        properties=properties,
        rows=tuple(rows),
        omission_marks=tuple(omission),
        ambiguity_entries=ambiguity,
        inconsistency_entries=inconsistency,
        incorrect_fact_entries=incorrect,
    )


# ---------------------------------------------------------------------------
# package serialization


def package_to_payload(package: TechniquePackage) -> dict:
    from .corpus import document_to_payload

    return {
        "document": document_to_payload(package.document),
        "items": [
            {
                "story_id": item.story_id,
                "extraction": {
                    "feature_verbs": list(item.extraction.feature_verbs),
                    "reason_nouns": list(item.extraction.reason_nouns),
                    "unmatched_tokens": list(item.extraction.unmatched_tokens),
                },
                "properties": list(item.properties),
                "form": form_to_payload(item.form),
            }
            for item in package.items
        ],
        "questions": [
            {"defect_type": q.defect_type, "text": q.text}
            for q in package.questions
        ],
        "lexicon_source": package.lexicon_source,
        "lexicon_size": package.lexicon_size,
        "generated_at": package.generated_at,
    }


def package_from_payload(payload: dict) -> TechniquePackage:
    from .corpus import document_from_payload

    expected = {
        "document", "items", "questions",
        "lexicon_source", "lexicon_size", "generated_at",
    }
    if not isinstance(payload, dict) or set(payload) != expected:
        raise FormatError("package payload must have keys %s" % sorted(expected))
    document = document_from_payload(payload["document"])
    items = tuple(
        PackageItem(
            story_id=raw["story_id"],
            extraction=ExtractionResult(
                story_id=raw["story_id"],
                feature_verbs=tuple(raw["extraction"]["feature_verbs"]),
                reason_nouns=tuple(raw["extraction"]["reason_nouns"]),
                unmatched_tokens=tuple(raw["extraction"]["unmatched_tokens"]),
            ),
            properties=tuple(raw["properties"]),
            form=form_from_payload(raw["form"]),
        )
        for raw in payload["items"]
    )
    return TechniquePackage(
        document=document,
        items=items,
        questions=tuple(
            VerificationQuestion(q["defect_type"], q["text"])
            for q in payload["questions"]
        ),
        lexicon_source=payload["lexicon_source"],
        lexicon_size=payload["lexicon_size"],
        generated_at=payload["generated_at"],
    )


# ---------------------------------------------------------------------------
# baseline checklists

_DESIGNER_QUESTIONS = (
    "Have the requirements specified enough information about the security "
    "policies for the designer to understand whether a layered security "
    "policy is required instead of a single point of vulnerability?",
    "If several administrator roles are defined, have they been defined as "
    "separate accounts with limited access to security resources, or a "
    "single account with comprehensive super user permissions?",
)

_TESTER_QUESTIONS = (
    "Have the requirements specified appropriate exception-handling "
    "functionality?",
    "Have the requirements specified adequate safeguards that would take "
    "effect once a malicious user has gained unauthorized access to the "
    "system?",
    "Does the system have a well-defined status, either a secure failure "
    "state or the start of a plausible recovery procedure, after a failure "
    "condition?",
)

_CRYPTOGRAPHY_QUESTIONS = (
    "Can the encoding mechanism specified for transmission and storage of "
    "data be broken?",
    "Do the cryptography mechanism specified follow well-known, "
    "well-documented, and publicly scrutinized algorithms, and if not, can "
    "they be easily broken?",
)

_AUTHENTICATION_QUESTIONS = (
    "Can the protocols for validating user identity be broken?",
    "If account lockout is specified, are there requirements in place to "
    "prevent denial-of-service attacks?",
    "Can user privileges be artificially elevated due to omission or poorly "
    "specified requirements?",
)

_DATA_VALIDATION_QUESTIONS = (
    "Do the requirements leave any opportunities for invalid data to be "
    "entered by the lack of validation of external data?",
)


@dataclass(frozen=True)
class BaselineChecklist:
    kind: str  # owasp_only | pbr_black_hat
    sections: tuple  # (title, tuple of item texts) pairs


def baseline_checklist(kind: str) -> BaselineChecklist:
    """Static comparison checklist: OWASP-only or PBR with black-hat sections."""
    if kind == "owasp_only":
        return BaselineChecklist(
            kind=kind,
            sections=(
                (
                    "OWASP high-level security requirements",
                    tuple(
                        "%s: %s" % (req.id, req.canonical_text)
                        for req in REQUIREMENTS
                    ),
                ),
                (
                    "Defect types",
                    tuple(
                        "%s (%s): %s"
                        % (DEFECT_TYPE_NAMES[code], code,
                           DEFECT_TYPE_DEFINITIONS[code])
                        for code in DEFECT_TYPES
                    ),
                ),
            ),
        )
    if kind == "pbr_black_hat":
        return BaselineChecklist(
            kind=kind,
            sections=(
                ("Designer perspective", _DESIGNER_QUESTIONS),
                ("Tester perspective", _TESTER_QUESTIONS),
                ("Black hat: Cryptography", _CRYPTOGRAPHY_QUESTIONS),
                ("Black hat: Authentication and Authorization",
                 _AUTHENTICATION_QUESTIONS),
                ("Black hat: Data Validation", _DATA_VALIDATION_QUESTIONS),
            ),
        )
    raise ValueError("unknown checklist kind %r" % kind)
