from __future__ import annotations

import io

import pytest
from hypothesis import given, strategies as st

from secspect import catalog
from secspect.errors import CollisionError, FormatError

# Golden copy of the keyword table: 23 distinct words, one of which (backup)
# appears in both word classes, giving 24 entries.
GOLDEN_KEYWORD_ROWS = {
    ("access", "verb"): ("C", "IA"),
    ("alter", "verb"): ("I",),
    ("apply", "verb"): ("IA",),
    ("auto-populate", "verb"): ("I",),
    ("backup", "verb"): ("A",),
    ("backup", "noun"): ("A",),
    ("change", "verb"): ("I",),
    ("create", "verb"): ("I",),
    ("day", "noun"): ("A",),
    ("define", "verb"): ("IA",),
    ("delete", "verb"): ("I",),
    ("display", "verb"): ("C",),
    ("establish", "verb"): ("IA",),
    ("export", "verb"): ("C",),
    ("generate", "verb"): ("I",),
    ("hour", "noun"): ("A",),
    ("modify", "verb"): ("I",),
    ("password", "noun"): ("IA",),
    ("period", "noun"): ("A",),
    ("privilege", "noun"): ("IA",),
    ("read", "verb"): ("C", "IA"),
    ("recover", "verb"): ("A",),
    ("role", "noun"): ("IA",),
    ("time", "noun"): ("A",),
}

# Golden copy of the requirement catalog: canonical text, plus the rewritten
# wording where the review form differs from the canonical one.
GOLDEN_REQUIREMENTS = {
    "C1": (
        "Data shall be protected from unauthorized observation and disclosure "
        "both in transit and when stored.",
        "Data shall be protected from unauthorized observation and disclosure "
        "both in transit AND when stored.",
    ),
    "C2": (
        "System sessions shall be unique to each individual and cannot be shared.",
        "System sessions shall be unique to each individual AND cannot be shared.",
    ),
    "C3": (
        "System sessions are invalidated when timed out during periods of "
        "inactivity.",
        None,
    ),
    "C4": (
        "TLS protocol shall be used where sensitive data is transmitted.",
        None,
    ),
    "C5": (
        "System shall use strong encryption algorithm at all times.",
        "System shall use strong algorithms (e.g, DES, AES, RSA) to encrypt data.",
    ),
    "I1": (
        "Any unauthorized modification of data must yield an auditable "
        "security-related event.",
        None,
    ),
    "I2": (
        "All input is validated to be correct and fit for the intended purpose.",
        "All input, e.g., query parameters, string variables and cookies, is "
        "validated to be correct and fit for the intended purpose.",
    ),
    "I3": (
        "Data from an external entity shall always be validated.",
        None,
    ),
    "A1": (
        "The application server shall be suitably hardened from a default "
        "configuration.",
        None,
    ),
    "A2": (
        "HTTP responses contain a safe character set in the content type header.",
        None,
    ),
    "A3": (
        "Backups must be implemented and recovery strategies must be considered.",
        None,
    ),
    "IA1": (
        "Users are associated with a well-defined set of roles and privileges.",
        None,
    ),
    "IA2": (
        "The digital identity of the sender of a communication must be verified.",
        None,
    ),
    "IA3": (
        "Only those authorized are able to authenticate and credentials are "
        "transported and stored in a secure manner.",
        None,
    ),
    "IA4": (
        "Passwords treatment must include complex passphrases, options to "
        "recover and reset the password and default passwords not allowed.",
        None,
    ),
}


def test_keyword_table_reproduces_exactly():
    lexicon = catalog.builtin_lexicon()
    rows = {
        (entry.lemma, entry.part_of_speech): entry.properties
        for entry in lexicon.entries
    }
    assert rows == GOLDEN_KEYWORD_ROWS
    assert len(lexicon.lemmas()) == 23
    assert len(lexicon.entries) == 24


def test_requirement_texts_reproduce_exactly():
    assert len(catalog.REQUIREMENTS) == 15
    for req in catalog.REQUIREMENTS:
        canonical, rewritten = GOLDEN_REQUIREMENTS[req.id]
        assert req.canonical_text == canonical
        assert req.rewritten_text == (rewritten or canonical)
        assert catalog.render_rewritten(req) == req.rewritten_text


def test_requirement_partition_counts():
    by_property = {code: catalog.requirements_for(code) for code in ("C", "I", "A", "IA")}
    assert [len(by_property[code]) for code in ("C", "I", "A", "IA")] == [5, 3, 3, 4]
    for code, requirements in by_property.items():
        assert all(req.property == code for req in requirements)
        assert [req.id for req in requirements] == sorted(
            (req.id for req in requirements), key=lambda r: int(r[len(code):])
        )


def test_property_descriptions():
    by_code = {prop.code: prop for prop in catalog.PROPERTIES}
    assert set(by_code) == {"C", "I", "A", "IA"}
    assert by_code["C"].name == "Confidentiality"
    assert by_code["C"].description == (
        "Degree to which the data is disclosed only as intended."
    )
    assert by_code["I"].name == "Integrity"
    assert by_code["A"].name == "Availability"
    assert by_code["IA"].name == "Identification & Authorization"


def test_emphasized_fragments_appear_in_their_rewritten_text():
    for req in catalog.REQUIREMENTS:
        for fragment in req.emphasis:
            assert fragment in req.rewritten_text


def _result(verbs=(), nouns=()):
    from secspect.extraction import ExtractionResult

    return ExtractionResult(
        story_id="US1",
        feature_verbs=tuple(verbs),
        reason_nouns=tuple(nouns),
        unmatched_tokens=(),
    )


def test_map_properties_unions_across_matches():
    lexicon = catalog.builtin_lexicon()
    assert catalog.map_properties(_result(verbs=("export",)), lexicon) == frozenset("C")
    assert catalog.map_properties(
        _result(verbs=("export", "delete"), nouns=("password",)), lexicon
    ) == frozenset({"C", "I", "IA"})


def test_map_properties_fallback_is_all_four():
    lexicon = catalog.builtin_lexicon()
    assert catalog.map_properties(_result(), lexicon) == frozenset(
        catalog.PROPERTY_ORDER
    )


def test_link_requirements_orders_by_property_then_number():
    rows = catalog.link_requirements(("IA", "C"))
    assert [req.id for req in rows] == ["C1", "C2", "C3", "C4", "C5",
                                       "IA1", "IA2", "IA3", "IA4"]
    everything = catalog.link_requirements(("C", "I", "A", "IA"))
    assert len(everything) == 15


def test_link_requirements_rejects_bad_input():
    with pytest.raises(ValueError):
        catalog.link_requirements(())
    with pytest.raises(ValueError):
        catalog.link_requirements(("X",))


@given(
    codes=st.sets(st.sampled_from(catalog.PROPERTY_ORDER), min_size=1).map(tuple)
)
def test_link_requirements_covers_exactly_the_selected_properties(codes):
    rows = catalog.link_requirements(codes)
    assert {req.property for req in rows} == set(codes)
    expected = sum(len(catalog.requirements_for(code)) for code in codes)
    assert len(rows) == expected


def _user_lexicon(text):
    return catalog.load_lexicon(io.StringIO(text))


def test_user_lexicon_adds_new_entries():
    lexicon = _user_lexicon(
        "entries:\n"
        "  - lemma: encrypt\n"
        "    pos: verb\n"
        "    properties: [C]\n"
    )
    assert lexicon.match("encrypt", "verb").properties == ("C",)
    assert lexicon.source == "user"
    assert len(lexicon.entries) == 25


def test_user_lexicon_merges_synonyms_for_same_properties():
    lexicon = _user_lexicon(
        "entries:\n"
        "  - lemma: delete\n"
        "    pos: verb\n"
        "    properties: [I]\n"
        "    synonyms: [remove]\n"
    )
    entry = lexicon.match("remove", "verb")
    assert entry is not None and entry.lemma == "delete"
    assert len(lexicon.entries) == 24


def test_user_lexicon_property_conflict_requires_override():
    text = (
        "entries:\n"
        "  - lemma: delete\n"
        "    pos: verb\n"
        "    properties: [A]\n"
    )
    with pytest.raises(CollisionError):
        _user_lexicon(text)
    lexicon = catalog.load_lexicon(io.StringIO(text), override=True)
    assert lexicon.match("delete", "verb").properties == ("A",)


@pytest.mark.parametrize(
    "text",
    [
        "entries: []",
        "not a mapping",
        "entries:\n  - lemma: x\n    pos: adjective\n    properties: [C]\n",
        "entries:\n  - lemma: x\n    pos: verb\n    properties: [Q]\n",
        "entries:\n  - lemma: x\n    pos: verb\n    properties: []\n",
        "entries:\n  - pos: verb\n    properties: [C]\n",
    ],
)
def test_malformed_lexicon_files_rejected(text):
    with pytest.raises(FormatError):
        _user_lexicon(text)


def test_duplicate_words_within_one_class_collide():
    with pytest.raises(CollisionError):
        _user_lexicon(
            "entries:\n"
            "  - lemma: encrypt\n"
            "    pos: verb\n"
            "    properties: [C]\n"
            "    synonyms: [cipher]\n"
            "  - lemma: cipher\n"
            "    pos: verb\n"
            "    properties: [C]\n"
        )


def test_lexicon_payload_round_trip():
    lexicon = _user_lexicon(
        "entries:\n"
        "  - lemma: encrypt\n"
        "    pos: verb\n"
        "    properties: [C]\n"
        "    synonyms: [cipher]\n"
    )
    payload = catalog.lexicon_to_payload(lexicon)
    assert catalog.lexicon_from_payload(payload) == lexicon
