"""Template-position keyword extraction from parsed user stories.

Verbs are taken from the feature block (block 2) and nouns from the reason
block (block 3); a token counts only when its normalized lemma is a lexicon
member of the block's word class. Normalization is rule-based suffix
stripping: plural endings are always stripped, verb inflections only when the
stripped form is confirmed by the lexicon.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .catalog import Lexicon, builtin_lexicon

# Auxiliary chain skipped while scanning blocks: copulas, modals, and the
# template residue "want"/"able"/"to" left over from surface variants such as
# "I want to be able to ...".
AUXILIARIES = frozenset(
    {
        "be",
        "is",
        "are",
        "been",
        "being",
        "able",
        "to",
        "can",
        "could",
        "may",
        "might",
        "shall",
        "should",
        "will",
        "would",
        "want",
    }
)

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+(?:[-'][A-Za-z0-9]+)*")


@dataclass(frozen=True)
class ExtractionResult:
    story_id: str
    feature_verbs: tuple  # lexicon verb lemmas/synonyms from block 2, in order
    reason_nouns: tuple  # lexicon noun lemmas/synonyms from block 3, in order
    unmatched_tokens: tuple  # normalized tokens that hit no entry (diagnostics)


def tokenize(text: str) -> list:
    """Split text into word tokens, preserving internal hyphens."""
    return _TOKEN_RE.findall(text)


def _strip_plural(token: str) -> str:
    if token.endswith("ies") and len(token) > 4:
        return token[:-3] + "y"
    if token.endswith("es") and len(token) > 3:
        stem = token[:-2]
        if stem.endswith(("s", "x", "z", "ch", "sh")):
            return stem
    if (
        token.endswith("s")
        and len(token) > 3
        and not token.endswith(("ss", "us", "is"))
    ):
        return token[:-1]
    return token


def _inflection_candidates(token: str) -> list:
    candidates = []
    for suffix in ("ing", "ed"):
        if token.endswith(suffix) and len(token) > len(suffix) + 1:
            stem = token[: -len(suffix)]
            candidates.append(stem)
            candidates.append(stem + "e")
            if len(stem) > 2 and stem[-1] == stem[-2]:
                candidates.append(stem[:-1])  # dropped doubled consonant
            if stem.endswith("i"):
                candidates.append(stem[:-1] + "y")  # applied -> apply
    return candidates


def normalize_token(token: str, lexicon: Optional[Lexicon] = None) -> str:
    """Lowercase and suffix-strip one token into its lemma form.

    Plural -s/-es/-ies endings are stripped unconditionally; -ed/-ing are
    stripped only when the resulting stem (or the token itself) is a lexicon
    lemma or synonym. Unknown words pass through unchanged apart from case
    folding and plural stripping.
    """
    if lexicon is None:
        lexicon = builtin_lexicon()
    word = token.lower()
    if word.endswith("'s"):
        word = word[:-2]
    if lexicon.is_member(word):
        return word
    plural = _strip_plural(word)
    if plural != word:
        word = plural
        if lexicon.is_member(word):
            return word
    for candidate in _inflection_candidates(word):
        if lexicon.is_member(candidate):
            return candidate
    return word


def _scan_block(text, part_of_speech, lexicon, matched, unmatched):
    for token in tokenize(text):
        if token.lower() in AUXILIARIES:
            continue
        lemma = normalize_token(token, lexicon)
        entry = lexicon.match(lemma, part_of_speech)
        if entry is not None:
            if entry.lemma not in matched:
                matched.append(entry.lemma)
        elif lemma not in unmatched:
            unmatched.append(lemma)


def extract_keywords(story, lexicon: Optional[Lexicon] = None) -> ExtractionResult:
    """Extract lexicon keywords from one story by template position.

    Deterministic: identical story and lexicon always produce an identical
    result. The returned lists are duplicate-free in first-occurrence order.
    """
    if lexicon is None:
        lexicon = builtin_lexicon()
    feature_verbs: list = []
    reason_nouns: list = []
    unmatched: list = []
    _scan_block(story.feature, "verb", lexicon, feature_verbs, unmatched)
    _scan_block(story.reason, "noun", lexicon, reason_nouns, unmatched)
    return ExtractionResult(
        story_id=story.id,
        feature_verbs=tuple(feature_verbs),
        reason_nouns=tuple(reason_nouns),
        unmatched_tokens=tuple(unmatched),
    )
