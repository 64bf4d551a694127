"""Security-property catalog, keyword lexicon, and OWASP high-level requirements.

Three fixed data sets drive the reading-technique generator:

* four security properties (confidentiality, integrity, availability,
  identification & authorization),
* a keyword lexicon mapping story verbs and nouns to those properties,
* fifteen OWASP high-level security requirements partitioned by property,
  each with a canonical wording and a rewritten wording used on review forms.

The requirement catalog is compiled in and not user-editable; the lexicon can
be extended through user files (see ``load_lexicon``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import yaml

from .errors import CollisionError, FormatError

PROPERTY_ORDER = ("C", "I", "A", "IA")
WORD_CLASSES = ("verb", "noun")


@dataclass(frozen=True)
class SecurityProperty:
    code: str  # C | I | A | IA
    name: str
    description: str


PROPERTIES = (
    SecurityProperty(
        code="C",
        name="Confidentiality",
        description="Degree to which the data is disclosed only as intended.",
    ),
    SecurityProperty(
        code="I",
        name="Integrity",
        description=(
            "Degree to which a system or component prevents unauthorized "
            "access to, or modification of, computer programs or data."
        ),
    ),
    SecurityProperty(
        code="A",
        name="Availability",
        description=(
            "Degree to which a system or component is operational when "
            "required for use."
        ),
    ),
    SecurityProperty(
        code="IA",
        name="Identification & Authorization",
        description=(
            "Degree to which the identity of a subject or resource can be "
            "proved to be the one claimed."
        ),
    ),
)

PROPERTY_BY_CODE = {prop.code: prop for prop in PROPERTIES}


@dataclass(frozen=True)
class LexiconEntry:
    lemma: str
    part_of_speech: str  # verb | noun
    properties: tuple  # non-empty, subset of PROPERTY_ORDER
    synonyms: tuple = ()

    def words(self):
        """All surface lemmas this entry answers to (lemma plus synonyms)."""
        return (self.lemma,) + self.synonyms


# Builtin keyword rows. "backup" is registered under both word classes; every
# other keyword belongs to exactly one class.
_BUILTIN_ROWS = (
    ("access", "verb", ("C", "IA")),
    ("alter", "verb", ("I",)),
    ("apply", "verb", ("IA",)),
    ("auto-populate", "verb", ("I",)),
    ("backup", "verb", ("A",)),
    ("backup", "noun", ("A",)),
    ("change", "verb", ("I",)),
    ("create", "verb", ("I",)),
    ("day", "noun", ("A",)),
    ("define", "verb", ("IA",)),
    ("delete", "verb", ("I",)),
    ("display", "verb", ("C",)),
    ("establish", "verb", ("IA",)),
    ("export", "verb", ("C",)),
    ("generate", "verb", ("I",)),
    ("hour", "noun", ("A",)),
    ("modify", "verb", ("I",)),
    ("password", "noun", ("IA",)),
    ("period", "noun", ("A",)),
    ("privilege", "noun", ("IA",)),
    ("read", "verb", ("C", "IA")),
    ("recover", "verb", ("A",)),
    ("role", "noun", ("IA",)),
    ("time", "noun", ("A",)),
)


@dataclass(frozen=True)
class Lexicon:
    entries: tuple
    source: str = "bundled"  # bundled | user
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        index = {}
        for entry in self.entries:
            for word in entry.words():
                key = (word, entry.part_of_speech)
                if key in index:
                    raise CollisionError(
                        "duplicate lexicon word %r (%s)" % (word, entry.part_of_speech)
                    )
                index[key] = entry
        object.__setattr__(self, "_index", index)

    def match(self, word: str, part_of_speech: str) -> Optional[LexiconEntry]:
        """Entry whose lemma or synonym equals ``word`` in the given class."""
        return self._index.get((word, part_of_speech))

    def is_member(self, word: str) -> bool:
        """True if ``word`` is a lemma or synonym in any word class."""
        return any((word, pos) in self._index for pos in WORD_CLASSES)

    def lemmas(self) -> frozenset:
        return frozenset(entry.lemma for entry in self.entries)


def builtin_lexicon() -> Lexicon:
    entries = tuple(
        LexiconEntry(lemma=lemma, part_of_speech=pos, properties=props)
        for lemma, pos, props in _BUILTIN_ROWS
    )
    return Lexicon(entries=entries, source="bundled")


@dataclass(frozen=True)
class HighLevelRequirement:
    id: str  # C1..C5 | I1..I3 | A1..A3 | IA1..IA4
    property: str  # owning property code; equals the id prefix
    canonical_text: str
    rewritten_text: str
    emphasis: tuple = ()  # substrings of rewritten_text highlighted on forms


def _req(req_id, canonical, rewritten=None, emphasis=()):
    prefix = req_id.rstrip("0123456789")
    return HighLevelRequirement(
        id=req_id,
        property=prefix,
        canonical_text=canonical,
        rewritten_text=canonical if rewritten is None else rewritten,
        emphasis=tuple(emphasis),
    )


REQUIREMENTS = (
    _req(
        "C1",
        "Data shall be protected from unauthorized observation and disclosure "
        "both in transit and when stored.",
        "Data shall be protected from unauthorized observation and disclosure "
        "both in transit AND when stored.",
        emphasis=("AND",),
    ),
    _req(
        "C2",
        "System sessions shall be unique to each individual and cannot be shared.",
        "System sessions shall be unique to each individual AND cannot be shared.",
        emphasis=("AND",),
    ),
    _req(
        "C3",
        "System sessions are invalidated when timed out during periods of inactivity.",
    ),
    _req(
        "C4",
        "TLS protocol shall be used where sensitive data is transmitted.",
    ),
    _req(
        "C5",
        "System shall use strong encryption algorithm at all times.",
        "System shall use strong algorithms (e.g, DES, AES, RSA) to encrypt data.",
        emphasis=("(e.g, DES, AES, RSA)",),
    ),
    _req(
        "I1",
        "Any unauthorized modification of data must yield an auditable "
        "security-related event.",
    ),
    _req(
        "I2",
        "All input is validated to be correct and fit for the intended purpose.",
        "All input, e.g., query parameters, string variables and cookies, is "
        "validated to be correct and fit for the intended purpose.",
        emphasis=("e.g., query parameters, string variables and cookies",),
    ),
    _req(
        "I3",
        "Data from an external entity shall always be validated.",
    ),
    _req(
        "A1",
        "The application server shall be suitably hardened from a default "
        "configuration.",
    ),
    _req(
        "A2",
        "HTTP responses contain a safe character set in the content type header.",
    ),
    _req(
        "A3",
        "Backups must be implemented and recovery strategies must be considered.",
    ),
    _req(
        "IA1",
        "Users are associated with a well-defined set of roles and privileges.",
    ),
    _req(
        "IA2",
        "The digital identity of the sender of a communication must be verified.",
    ),
    _req(
        "IA3",
        "Only those authorized are able to authenticate and credentials are "
        "transported and stored in a secure manner.",
    ),
    _req(
        "IA4",
        "Passwords treatment must include complex passphrases, options to "
        "recover and reset the password and default passwords not allowed.",
    ),
)

REQUIREMENT_BY_ID = {req.id: req for req in REQUIREMENTS}


def requirements_for(property_code: str) -> tuple:
    """All requirements owned by one property, in numeric order."""
    return tuple(req for req in REQUIREMENTS if req.property == property_code)


# ---------------------------------------------------------------------------
# lexicon loading


def _parse_entry(raw, locus):
    if not isinstance(raw, dict):
        raise FormatError("%s: entry must be a mapping" % locus)
    unknown = set(raw) - {"lemma", "pos", "properties", "synonyms"}
    if unknown:
        raise FormatError("%s: unknown fields %s" % (locus, sorted(unknown)))
    lemma = raw.get("lemma")
    if not isinstance(lemma, str) or not lemma.strip():
        raise FormatError("%s: missing lemma" % locus)
    pos = raw.get("pos")
    if pos not in WORD_CLASSES:
        raise FormatError("%s: pos must be one of %s" % (locus, list(WORD_CLASSES)))
    props = raw.get("properties")
    if not isinstance(props, list) or not props:
        raise FormatError("%s: properties must be a non-empty list" % locus)
    for code in props:
        if code not in PROPERTY_ORDER:
            raise FormatError("%s: unknown property code %r" % (locus, code))
    synonyms = raw.get("synonyms", [])
    if not isinstance(synonyms, list) or not all(
        isinstance(s, str) and s.strip() for s in synonyms
    ):
        raise FormatError("%s: synonyms must be a list of words" % locus)
    ordered = tuple(code for code in PROPERTY_ORDER if code in props)
    return LexiconEntry(
        lemma=lemma.strip().lower(),
        part_of_speech=pos,
        properties=ordered,
        synonyms=tuple(s.strip().lower() for s in synonyms),
    )


def load_lexicon(
    source: Union[None, str, IO] = None, *, override: bool = False
) -> Lexicon:
    """Load the builtin lexicon, optionally merged with a user lexicon file.

    ``source`` is ``None`` for the builtin set, or a path / open stream of a
    YAML file with the shape ``{entries: [{lemma, pos, properties, synonyms}]}``.
    User entries are additive: a new (lemma, class) pair is appended, and an
    entry matching a builtin pair with the same properties contributes extra
    synonyms. Replacing a builtin entry's properties requires ``override=True``;
    without it the load fails with :class:`CollisionError`.
    """
    if source is None:
        return builtin_lexicon()
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as handle:
            return load_lexicon(handle, override=override)
    try:
        data = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        raise FormatError("lexicon file is not valid YAML: %s" % exc) from None
    if not isinstance(data, dict) or set(data) != {"entries"}:
        raise FormatError("lexicon file must be a mapping with one key: entries")
    raw_entries = data["entries"]
    if not isinstance(raw_entries, list) or not raw_entries:
        raise FormatError("entries must be a non-empty list")

    merged = {
        (entry.lemma, entry.part_of_speech): entry
        for entry in builtin_lexicon().entries
    }
    builtin_keys = set(merged)
    for position, raw in enumerate(raw_entries):
        entry = _parse_entry(raw, "entries[%d]" % position)
        key = (entry.lemma, entry.part_of_speech)
        existing = merged.get(key)
        if existing is None:
            merged[key] = entry
        elif existing.properties == entry.properties:
            extra = tuple(s for s in entry.synonyms if s not in existing.synonyms)
            merged[key] = LexiconEntry(
                lemma=existing.lemma,
                part_of_speech=existing.part_of_speech,
                properties=existing.properties,
                synonyms=existing.synonyms + extra,
            )
        elif override and key in builtin_keys:
            merged[key] = entry
        else:
            raise CollisionError(
                "entry %r (%s) conflicts with an existing entry; "
                "pass override to replace builtin rows"
                % (entry.lemma, entry.part_of_speech)
            )
    return Lexicon(entries=tuple(merged.values()), source="user")


def lexicon_from_payload(payload: dict) -> Lexicon:
    """Rebuild a lexicon from its serialized payload."""
    if not isinstance(payload, dict) or set(payload) != {"entries", "source"}:
        raise FormatError("lexicon payload must have keys entries, source")
    if payload["source"] not in ("bundled", "user"):
        raise FormatError("lexicon source must be bundled or user")
    entries = tuple(
        _parse_entry(raw, "entries[%d]" % position)
        for position, raw in enumerate(payload["entries"])
    )
    return Lexicon(entries=entries, source=payload["source"])


def lexicon_to_payload(lexicon: Lexicon) -> dict:
    return {
        "entries": [
            {
                "lemma": entry.lemma,
                "pos": entry.part_of_speech,
                "properties": list(entry.properties),
                "synonyms": list(entry.synonyms),
            }
            for entry in lexicon.entries
        ],
        "source": lexicon.source,
    }


# ---------------------------------------------------------------------------
# property mapping


def map_properties(result, lexicon: Lexicon) -> frozenset:
    """Union of properties over matched lemmas; all four when nothing matched.

    ``result`` is an :class:`~secspect.extraction.ExtractionResult`. The
    fallback to the full property set keeps unmatched stories reviewable
    against every requirement.
    """
    codes = set()
    for word in result.feature_verbs:
        entry = lexicon.match(word, "verb")
        if entry is not None:
            codes.update(entry.properties)
    for word in result.reason_nouns:
        entry = lexicon.match(word, "noun")
        if entry is not None:
            codes.update(entry.properties)
    if not codes:
        return frozenset(PROPERTY_ORDER)
    return frozenset(codes)


def link_requirements(properties: Iterable[str]) -> tuple:
    """Requirements for the given properties in catalog order (C, I, A, IA)."""
    codes = set(properties)
    if not codes:
        raise ValueError("properties must be non-empty")
    unknown = codes - set(PROPERTY_ORDER)
    if unknown:
        raise ValueError("unknown property codes: %s" % sorted(unknown))
    linked = []
    for code in PROPERTY_ORDER:
        if code in codes:
            linked.extend(requirements_for(code))
    return tuple(linked)


def render_rewritten(req: HighLevelRequirement) -> str:
    """Display text of a requirement as it appears on review forms."""
    return req.rewritten_text
