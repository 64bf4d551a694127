"""Command-line interface: generate, lexicon, session, analyze, reproduce, serve.

All subcommands are deterministic given identical inputs and flags; output
files are written atomically so failures never leave partial artifacts. Exit
codes: 0 success, 1 domain error (diagnostic on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import analytics, catalog, corpus, persistence, session as session_mod
from . import technique
from .errors import EmptyGroup, FormatError, SecspectError


def default_data_dir() -> str:
    """Base directory for default outputs (env SECSPECT_DATA_DIR, else cwd)."""
    return os.environ.get("SECSPECT_DATA_DIR", ".")


def _emit(data, out_path):
    """Write bytes/text to a path atomically, or to stdout when no path."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    if out_path:
        persistence.write_bytes_atomic(data, out_path)
    else:
        sys.stdout.buffer.write(data)


def _load_lexicon_flag(args) -> catalog.Lexicon:
    return catalog.load_lexicon(
        args.lexicon, override=getattr(args, "override_lexicon", False)
    )


# ---------------------------------------------------------------------------
# subcommands


def _cmd_generate(args) -> int:
    document = corpus.load_document(args.stories)
    lexicon = _load_lexicon_flag(args)
    generated_at = None
    if args.stamp:
        import datetime

        generated_at = datetime.datetime.now(datetime.timezone.utc).isoformat()
    package = technique.generate_package(document, lexicon, generated_at)
    if args.format == "machine":
        _emit(persistence.save(package), args.out)
    else:
        lines = []
        for item in package.items:
            story = next(
                s for s in document.stories if s.id == item.story_id
            )
            lines.append("%s: %s" % (story.id, story.raw_text))
            for spec in document.specs_for(story.id):
                lines.append("  %s: %s" % (spec.id, spec.text))
            lines.append("")
            lines.append(technique.render_form(item.form))
        lines.append("Verification questions")
        for question in package.questions:
            lines.append("  [%s] %s" % (question.defect_type, question.text))
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_lexicon(args) -> int:
    lexicon = _load_lexicon_flag(args)
    if args.format == "machine":
        _emit(persistence.save(lexicon), args.out)
    else:
        lines = ["| lemma | class | properties | synonyms |",
                 "| --- | --- | --- | --- |"]
        for entry in sorted(
            lexicon.entries, key=lambda e: (e.lemma, e.part_of_speech)
        ):
            lines.append(
                "| %s | %s | %s | %s |"
                % (
                    entry.lemma,
                    entry.part_of_speech,
                    "+".join(entry.properties),
                    ", ".join(entry.synonyms),
                )
            )
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _parse_session_command(line):
    parts = line.strip().split()
    if not parts:
        return None
    return parts[0].lower(), parts[1:]


def _cmd_session_run(args) -> int:
    package = persistence.load_file(args.package)
    if not isinstance(package, technique.TechniquePackage):
        raise FormatError("%s is not a technique package" % args.package)
    active = session_mod.start_session(package, args.inspector, args.treatment)
    current_story = package.story_ids()[0]
    out = sys.stdout
    out.write(
        "session %s started (%s); stories: %s\n"
        % (active.session_id, args.treatment, ", ".join(package.story_ids()))
    )
    out.write(
        "commands: story <US>, o <row>, a <SS>, if <SS>, is <SS> <SS> [...], "
        "del <n>, list, finish, abort\n"
    )
    for line in sys.stdin:
        parsed = _parse_session_command(line)
        if parsed is None:
            continue
        command, rest = parsed
        try:
            if command == "story":
                if rest and rest[0] in package.story_ids():
                    current_story = rest[0]
                    out.write("story %s\n" % current_story)
                else:
                    out.write("error: unknown story\n")
            elif command in ("o", "a", "if"):
                if len(rest) != 1:
                    out.write("error: %s takes one location\n" % command)
                    continue
                record = session_mod.DefectRecord(
                    current_story, command.upper(), rest[0]
                )
                session_mod.record_defect(active, record)
                out.write("recorded %d\n" % (len(active.defects) - 1))
            elif command == "is":
                record = session_mod.DefectRecord(
                    current_story, "IS", frozenset(rest)
                )
                session_mod.record_defect(active, record)
                out.write("recorded %d\n" % (len(active.defects) - 1))
            elif command == "del":
                session_mod.delete_defect(active, int(rest[0]))
                out.write("deleted\n")
            elif command == "list":
                for index, record in enumerate(active.defects):
                    location = (
                        "+".join(sorted(record.location))
                        if isinstance(record.location, frozenset)
                        else record.location
                    )
                    out.write(
                        "%d: %s %s %s\n"
                        % (index, record.story_id, record.defect_type, location)
                    )
            elif command == "finish":
                forms, duration = session_mod.finish_session(active)
                for form in forms:
                    out.write(technique.render_form(form))
                out.write("duration: %.1f minutes\n" % duration)
                if args.out:
                    persistence.save_file(active, args.out)
                    out.write("saved %s\n" % args.out)
                return 0
            elif command == "abort":
                sys.stderr.write("session aborted; nothing written\n")
                return 1
            else:
                out.write("error: unknown command %r\n" % command)
        except (SecspectError, IndexError, ValueError) as exc:
            out.write("error: %s\n" % exc)
    sys.stderr.write("input ended before finish; nothing written\n")
    return 1


def _cmd_session_render(args) -> int:
    loaded = persistence.load_file(args.session)
    if not isinstance(loaded, session_mod.InspectionSession):
        raise FormatError("%s is not a session file" % args.session)
    forms = session_mod.filled_forms(loaded)
    if args.format == "machine":
        payload = [technique.form_to_payload(form) for form in forms]
        _emit(persistence.canonical_bytes(payload), args.out)
    else:
        text = "".join(technique.render_form(form) for form in forms)
        text += "duration: %.1f minutes\n" % loaded.duration_minutes()
        _emit(text, args.out)
    return 0


def _load_analysis_key(key_ref):
    if key_ref == "bundled":
        return analytics.load_experiment_key()
    return analytics.load_answer_key(key_ref)


def _scored_from_source(source, key):
    if source == "bundled":
        return analytics.load_trial_sessions(key=key)
    if os.path.isdir(source):
        scored = []
        names = sorted(os.listdir(source))
        for name in names:
            if not name.endswith(".json"):
                continue
            loaded = persistence.load_file(os.path.join(source, name))
            if not isinstance(loaded, session_mod.InspectionSession):
                raise FormatError("%s is not a session file" % name)
            scored.append(analytics.score_session(loaded, key))
        if not scored:
            raise EmptyGroup("no session files in %s" % source)
        return tuple(scored)
    return analytics.load_trial_sessions(source, key=key)


def _cmd_analyze(args) -> int:
    key = _load_analysis_key(args.key)
    scored = _scored_from_source(args.source, key)
    group_by = args.group_by
    if group_by is None:
        group_by = "trial" if all(s.trial is not None for s in scored) else "treatment"
    report = analytics.build_report(
        scored,
        key,
        group_by=group_by,
        alpha=args.alpha,
        outlier_filter=not args.no_outlier_filter,
    )
    if args.format == "machine":
        _emit(persistence.save(report), args.out)
    else:
        _emit(analytics.render_report(report), args.out)
    return 0


def _cmd_reproduce(args) -> int:
    out_dir = args.out or os.path.join(default_data_dir(), "reproduction")
    result = analytics.reproduce(alpha=args.alpha)
    persistence.save_file(result["report"], os.path.join(out_dir, "report.json"))
    persistence.write_text_atomic(
        analytics.render_report(result["report"]),
        os.path.join(out_dir, "report.txt"),
    )
    persistence.write_text_atomic(
        analytics.render_reproduction(result),
        os.path.join(out_dir, "deviation.txt"),
    )
    sys.stdout.write("wrote report.json, report.txt, deviation.txt to %s\n" % out_dir)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(snapshot_dir=args.snapshot_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="secspect",
        description=(
            "Generate security reading-technique packages from user stories, "
            "run inspection sessions, and analyze their defect metrics."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="build a technique package from stories")
    gen.add_argument("stories", help="story file (YAML)")
    gen.add_argument("--lexicon", help="user lexicon file merged over the builtin")
    gen.add_argument(
        "--override-lexicon",
        action="store_true",
        help="allow the user lexicon to replace builtin entries",
    )
    gen.add_argument("--out", help="output path (stdout when omitted)")
    gen.add_argument(
        "--format", choices=("machine", "text"), default="machine"
    )
    gen.add_argument(
        "--stamp",
        action="store_true",
        help="embed a generation timestamp (breaks byte determinism)",
    )
    gen.set_defaults(func=_cmd_generate)

    lex = sub.add_parser("lexicon", help="show the active keyword lexicon")
    lex.add_argument("--lexicon", help="user lexicon file merged over the builtin")
    lex.add_argument("--override-lexicon", action="store_true")
    lex.add_argument("--out")
    lex.add_argument("--format", choices=("machine", "text"), default="text")
    lex.set_defaults(func=_cmd_lexicon)

    ses = sub.add_parser("session", help="run or render inspection sessions")
    ses_sub = ses.add_subparsers(dest="session_command", required=True)
    run = ses_sub.add_parser("run", help="prompt-driven terminal session")
    run.add_argument("--package", required=True, help="technique package file")
    run.add_argument("--inspector", required=True)
    run.add_argument(
        "--treatment",
        choices=session_mod.TREATMENTS,
        default="our_approach",
    )
    run.add_argument("--out", help="session file written on finish")
    run.set_defaults(func=_cmd_session_run)
    render = ses_sub.add_parser("render", help="render a finished session's forms")
    render.add_argument("session", help="session file")
    render.add_argument("--format", choices=("document", "machine"), default="document")
    render.add_argument("--out")
    render.set_defaults(func=_cmd_session_render)

    ana = sub.add_parser("analyze", help="score sessions and compare groups")
    ana.add_argument(
        "source",
        help="'bundled', a dataset CSV, or a directory of session files",
    )
    ana.add_argument(
        "--key",
        default="bundled",
        help="answer key file, or 'bundled' for the experiment key",
    )
    ana.add_argument("--no-outlier-filter", action="store_true")
    ana.add_argument("--alpha", type=float, default=0.05)
    ana.add_argument("--group-by", choices=("trial", "treatment"), default=None)
    ana.add_argument("--format", choices=("machine", "text"), default="text")
    ana.add_argument("--out")
    ana.set_defaults(func=_cmd_analyze)

    rep = sub.add_parser(
        "reproduce", help="recompute the bundled trial analysis and deviations"
    )
    rep.add_argument("--out", help="output directory (default ./reproduction)")
    rep.add_argument("--alpha", type=float, default=0.05)
    rep.set_defaults(func=_cmd_reproduce)

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    srv.add_argument("--snapshot-dir", help="persist session snapshots here")
    srv.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SecspectError as exc:
        sys.stderr.write("error: %s: %s\n" % (exc.code, exc))
        return 1
    except FileNotFoundError as exc:
        sys.stderr.write("error: FILE_NOT_FOUND: %s\n" % exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
