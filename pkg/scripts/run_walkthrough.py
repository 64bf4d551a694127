"""Run the complete technique flow on the bundled single-story example.

Generates the reading package, replays the reference findings in a simulated
28-minute session, renders the filled reporting form, and scores the result
against the bundled answer key.
"""

from __future__ import annotations

import argparse
import sys

from secspect import analytics, corpus, technique
from secspect.session import DefectRecord, finish_session, record_defect, start_session

FINDINGS = (
    ("US1", "O", "C2"),
    ("US1", "O", "C4"),
    ("US1", "A", "SS4"),
    ("US1", "IS", ("SS2", "SS3")),
    ("US1", "IF", "SS5"),
)


class _ManualClock:
    def __init__(self):
        self.now = 0.0

    def __call__(self):
        return self.now


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--minutes",
        type=float,
        default=28.0,
        help="simulated session length (default: 28)",
    )
    args = parser.parse_args(argv)

    document = corpus.load_walkthrough_document()
    package = technique.generate_package(document)
    item = package.item_for("US1")

    story = document.stories[0]
    print("story %s: %s" % (story.id, story.raw_text))
    print("extracted verbs: %s" % (item.extraction.feature_verbs,))
    print("extracted nouns: %s" % (item.extraction.reason_nouns,))
    print("mapped properties: %s" % (item.properties,))
    print()
    print(technique.render_form(item.form))
    print()

    clock = _ManualClock()
    session = start_session(package, "walkthrough", "our_approach", clock=clock)
    for story_id, defect_type, location in FINDINGS:
        record_defect(session, DefectRecord(story_id, defect_type, location))
        print("recorded %s at %s" % (defect_type, location))
    clock.now = args.minutes * 60.0
    forms, duration = finish_session(session)
    print()
    print(technique.render_form(forms[0]))
    print()
    print(
        "entries: %d  defect tally: %d  duration: %.1f min"
        % (forms[0].record_count(), forms[0].defect_tally(), duration)
    )

    scored = analytics.score_session(session, analytics.load_walkthrough_key())
    print(
        "scored: %d true positives, %d false positives" %
        (scored.tp_instances, scored.fp_instances)
    )
    print(
        "effectiveness: %.0f%%  efficiency: %.1f defects/hour"
        % (100.0 * scored.effectiveness, scored.efficiency)
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
