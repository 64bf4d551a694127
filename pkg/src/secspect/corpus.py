"""User-story parsing and specification-document loading.

A user story follows the three-block skeleton

    As a [role], I want to [feature], so that [reason].

Stories arrive in YAML documents together with their attached security
specifications (one declarative security statement each, labelled SS1..SSn
per story).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import IO, Union

import yaml

from .errors import FormatError, NotAUserStory

# Accepted surface variants: "a|an|the" article, optional commas, "I want"
# with optional "to" or "I would like to", optional final period.
_STORY_RE = re.compile(
    r"^\s*As\s+(?:a|an|the)\s+(?P<role>.+?)\s*,?\s+"
    r"I\s+(?:want(?:\s+to)?|would\s+like\s+to)\s+(?P<feature>.+?)\s*,?\s+"
    r"so\s+that\s+(?P<reason>.+?)\s*$",
    re.IGNORECASE | re.DOTALL,
)
_SO_THAT_RE = re.compile(r"\bso\s+that\b", re.IGNORECASE)
_SPEC_ID_RE = re.compile(r"^SS([1-9][0-9]*)$")


@dataclass(frozen=True)
class UserStory:
    id: str
    raw_text: str
    role: str
    feature: str
    reason: str


@dataclass(frozen=True)
class SecuritySpecification:
    id: str  # SS{n}, contiguous from 1 within each story
    story_id: str
    text: str


@dataclass(frozen=True)
class SpecificationDocument:
    stories: tuple
    specs: tuple

    def story_ids(self):
        return tuple(story.id for story in self.stories)

    def specs_for(self, story_id: str) -> tuple:
        return tuple(spec for spec in self.specs if spec.story_id == story_id)


def parse_user_story(text: str, story_id: str = "US1") -> UserStory:
    """Split one sentence into the role, feature, and reason blocks.

    Raises :class:`NotAUserStory` when a skeleton marker is missing, a block
    is empty, or the sentence carries more than one "so that" clause.
    """
    if not isinstance(text, str) or not text.strip():
        raise NotAUserStory("story %s: empty text" % story_id)
    if len(_SO_THAT_RE.findall(text)) > 1:
        raise NotAUserStory(
            "story %s: more than one 'so that' clause" % story_id
        )
    match = _STORY_RE.match(text.strip())
    if match is None:
        raise NotAUserStory(
            "story %s: text does not follow the "
            "'As a [role], I want to [feature], so that [reason]' skeleton"
            % story_id
        )
    role = match.group("role").strip()
    feature = match.group("feature").strip()
    reason = match.group("reason").strip().rstrip(".").strip()
    def _has_words(block):
        return any(ch.isalnum() for ch in block)

    if not all(_has_words(block) for block in (role, feature, reason)):
        raise NotAUserStory("story %s: a skeleton block is empty" % story_id)
    return UserStory(
        id=story_id,
        raw_text=text.strip(),
        role=role,
        feature=feature,
        reason=reason,
    )


def skeleton(story: UserStory) -> str:
    """Canonical sentence reconstruction of a parsed story."""
    return "As a %s, I want to %s, so that %s." % (
        story.role,
        story.feature,
        story.reason,
    )


def _require(condition, message):
    if not condition:
        raise FormatError(message)


def document_from_payload(payload) -> SpecificationDocument:
    """Build and validate a document from its mapping form.

    The mapping shape is ``{stories: [{id, text, specs: [{id, text}]}]}``;
    ``specs`` may be omitted for stories without security specifications.
    """
    _require(isinstance(payload, dict), "document must be a mapping")
    _require(
        set(payload) == {"stories"},
        "document must have exactly one top-level key: stories",
    )
    raw_stories = payload["stories"]
    _require(
        isinstance(raw_stories, list) and raw_stories,
        "stories must be a non-empty list",
    )
    stories = []
    specs = []
    seen_ids = set()
    for s_index, raw_story in enumerate(raw_stories):
        locus = "stories[%d]" % s_index
        _require(isinstance(raw_story, dict), "%s: story must be a mapping" % locus)
        unknown = set(raw_story) - {"id", "text", "specs"}
        _require(not unknown, "%s: unknown fields %s" % (locus, sorted(unknown)))
        story_id = raw_story.get("id")
        _require(
            isinstance(story_id, str) and story_id.strip(),
            "%s: missing story id" % locus,
        )
        story_id = story_id.strip()
        _require(
            story_id not in seen_ids, "%s: duplicate story id %r" % (locus, story_id)
        )
        seen_ids.add(story_id)
        text = raw_story.get("text")
        _require(
            isinstance(text, str) and text.strip(), "%s: missing story text" % locus
        )
        stories.append(parse_user_story(text, story_id=story_id))

        raw_specs = raw_story.get("specs", [])
        _require(isinstance(raw_specs, list), "%s: specs must be a list" % locus)
        for p_index, raw_spec in enumerate(raw_specs):
            spec_locus = "%s.specs[%d]" % (locus, p_index)
            _require(
                isinstance(raw_spec, dict), "%s: spec must be a mapping" % spec_locus
            )
            unknown = set(raw_spec) - {"id", "text"}
            _require(
                not unknown, "%s: unknown fields %s" % (spec_locus, sorted(unknown))
            )
            spec_id = raw_spec.get("id")
            _require(
                isinstance(spec_id, str) and _SPEC_ID_RE.match(spec_id),
                "%s: spec id must look like SS1, SS2, ..." % spec_locus,
            )
            expected = "SS%d" % (p_index + 1)
            _require(
                spec_id == expected,
                "%s: spec ids must be contiguous from SS1; expected %s, got %s"
                % (spec_locus, expected, spec_id),
            )
            spec_text = raw_spec.get("text")
            _require(
                isinstance(spec_text, str) and spec_text.strip(),
                "%s: missing spec text" % spec_locus,
            )
            specs.append(
                SecuritySpecification(
                    id=spec_id, story_id=story_id, text=spec_text.strip()
                )
            )
    return SpecificationDocument(stories=tuple(stories), specs=tuple(specs))


def document_to_payload(document: SpecificationDocument) -> dict:
    return {
        "stories": [
            {
                "id": story.id,
                "text": story.raw_text,
                "specs": [
                    {"id": spec.id, "text": spec.text}
                    for spec in document.specs_for(story.id)
                ],
            }
            for story in document.stories
        ]
    }


def load_document(source: Union[str, IO]) -> SpecificationDocument:
    """Parse a story file (YAML) into a validated document.

    ``source`` is a path or an open text stream. Malformed files raise
    :class:`FormatError` with the offending locus; stories that do not parse
    raise :class:`NotAUserStory` carrying the story id.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as handle:
            return load_document(handle)
    try:
        payload = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        raise FormatError("story file is not valid YAML: %s" % exc) from None
    return document_from_payload(payload)


def _load_bundled(name: str) -> SpecificationDocument:
    from importlib import resources
    import io

    text = (
        resources.files("secspect.data").joinpath(name).read_text(encoding="utf-8")
    )
    return load_document(io.StringIO(text))


def load_walkthrough_document() -> SpecificationDocument:
    """Bundled single-story walkthrough document."""
    return _load_bundled("walkthrough_document.yaml")


def load_experiment_document() -> SpecificationDocument:
    """Bundled two-story document used with the seeded experiment key."""
    return _load_bundled("experiment_document.yaml")
