"""Scoring and group statistics for finished inspection sessions.

Sessions are scored against answer keys of seeded defects; the resulting
per-session effectiveness (true defects found over seeded defects) and
efficiency (true defects per hour) feed group comparisons (Mann-Whitney,
Cohen's d), per-type detection distributions, and mean performance tables.
A bundled multi-trial dataset ships with the package together with the
summary figures originally reported for it, so the whole analysis can be
reproduced and deviations documented.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass
from importlib import resources
from typing import IO, Optional, Sequence, Union

import yaml

from .errors import EmptyGroup, FormatError, KeyMismatch, SessionNotRunning
from .session import InspectionSession
from .stats import GroupComparison, mann_whitney
from .technique import DEFECT_TYPES

TREATMENT_LABELS = {
    "our_approach": "Our approach",
    "owasp_only": "OWASP high-level SRs",
    "pbr_black_hat": "PBR Black Hat",
}

OUTLIER_MINIMUM_TP = 2  # sessions below this true-defect count are discarded


# ---------------------------------------------------------------------------
# answer keys


@dataclass(frozen=True)
class SeededDefect:
    story_id: str
    defect_type: str  # O | A | IS | IF
    location: Union[str, frozenset]

    def __post_init__(self):
        if self.defect_type == "IS" and not isinstance(self.location, frozenset):
            object.__setattr__(self, "location", frozenset(self.location))

    def instances(self) -> int:
        if self.defect_type == "IS":
            return len(self.location)
        return 1


@dataclass(frozen=True)
class AnswerKey:
    defects: tuple

    def story_ids(self) -> frozenset:
        return frozenset(seed.story_id for seed in self.defects)

    def totals_by_type(self) -> dict:
        totals = {code: 0 for code in DEFECT_TYPES}
        for seed in self.defects:
            totals[seed.defect_type] += seed.instances()
        return totals

    def seeded_total(self) -> int:
        return sum(self.totals_by_type().values())


def _parse_seed(raw, story_id, locus):
    if not isinstance(raw, dict):
        raise FormatError("%s: seeded defect must be a mapping" % locus)
    defect_type = raw.get("type")
    if defect_type not in DEFECT_TYPES:
        raise FormatError("%s: type must be one of %s" % (locus, list(DEFECT_TYPES)))
    if defect_type == "IS":
        if set(raw) != {"type", "locations"}:
            raise FormatError("%s: IS seeds use fields type, locations" % locus)
        locations = raw["locations"]
        if (
            not isinstance(locations, list)
            or len(locations) < 2
            or not all(isinstance(s, str) and s for s in locations)
        ):
            raise FormatError("%s: locations must list at least two ids" % locus)
        return SeededDefect(story_id, "IS", frozenset(locations))
    if set(raw) != {"type", "location"}:
        raise FormatError("%s: seeds use fields type, location" % locus)
    location = raw["location"]
    if not isinstance(location, str) or not location:
        raise FormatError("%s: missing location" % locus)
    return SeededDefect(story_id, defect_type, location)


def key_from_payload(payload) -> AnswerKey:
    if not isinstance(payload, dict) or set(payload) != {"stories"}:
        raise FormatError("answer key must have one top-level key: stories")
    raw_stories = payload["stories"]
    if not isinstance(raw_stories, list) or not raw_stories:
        raise FormatError("stories must be a non-empty list")
    defects = []
    seen = set()
    for s_index, raw_story in enumerate(raw_stories):
        locus = "stories[%d]" % s_index
        if not isinstance(raw_story, dict) or set(raw_story) != {"id", "seeded"}:
            raise FormatError("%s: story entries use fields id, seeded" % locus)
        story_id = raw_story["id"]
        if not isinstance(story_id, str) or not story_id:
            raise FormatError("%s: missing story id" % locus)
        if story_id in seen:
            raise FormatError("%s: duplicate story id %r" % (locus, story_id))
        seen.add(story_id)
        seeds = raw_story["seeded"]
        if not isinstance(seeds, list) or not seeds:
            raise FormatError("%s: seeded must be a non-empty list" % locus)
        for d_index, raw_seed in enumerate(seeds):
            defects.append(
                _parse_seed(raw_seed, story_id, "%s.seeded[%d]" % (locus, d_index))
            )
    return AnswerKey(defects=tuple(defects))


def key_to_payload(key: AnswerKey) -> dict:
    stories: dict = {}
    for seed in key.defects:
        entry: dict = {"type": seed.defect_type}
        if seed.defect_type == "IS":
            entry["locations"] = sorted(seed.location)
        else:
            entry["location"] = seed.location
        stories.setdefault(seed.story_id, []).append(entry)
    return {
        "stories": [
            {"id": story_id, "seeded": seeds} for story_id, seeds in stories.items()
        ]
    }


def load_answer_key(source: Union[str, IO]) -> AnswerKey:
    """Load a seeded-defect answer key from a YAML file or stream."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as handle:
            return load_answer_key(handle)
    try:
        payload = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        raise FormatError("answer key is not valid YAML: %s" % exc) from None
    return key_from_payload(payload)


# ---------------------------------------------------------------------------
# per-session scoring


@dataclass(frozen=True)
class ScoredSession:
    session_id: str
    inspector_id: str
    treatment: str
    trial: Optional[int]
    duration_minutes: float
    per_type_found: dict  # O/A/IS/IF -> true defect instances
    tp_instances: int
    fp_instances: int
    effectiveness: float
    efficiency: float
    true_positives: tuple = ()
    false_positives: tuple = ()


def effectiveness(found: int, seeded: int) -> float:
    """Ratio of true defects found over seeded defects."""
    if seeded <= 0:
        raise ValueError("seeded must be positive")
    if not 0 <= found <= seeded:
        raise ValueError("found must lie in [0, seeded]")
    return found / seeded


def efficiency(found: int, duration_minutes: float) -> float:
    """True defects found per hour of review time."""
    if duration_minutes <= 0:
        raise ValueError("duration must be positive")
    return found * 60.0 / duration_minutes


def score_session(
    session: InspectionSession, key: AnswerKey, trial: Optional[int] = None
) -> ScoredSession:
    """Score one finished session against an answer key.

    A record is a true positive when its (type, location) matches a seeded
    defect of its story; an inconsistency matches only if the recorded set
    equals the seeded set. A matching record credits every seeded defect at
    that (type, location) that has not been credited yet, and each seeded
    defect is credited at most once across the session.
    """
    if session.state != "finished":
        raise SessionNotRunning(
            "session %s must be finished before scoring" % session.session_id
        )
    package_stories = frozenset(session.package.story_ids())
    if package_stories != key.story_ids():
        raise KeyMismatch(
            "key stories %s do not match package stories %s"
            % (sorted(key.story_ids()), sorted(package_stories))
        )
    unused = list(key.defects)
    per_type = {code: 0 for code in DEFECT_TYPES}
    true_positives = []
    false_positives = []
    tp_instances = 0
    fp_instances = 0
    for record in session.defects:
        matches = [
            seed
            for seed in unused
            if seed.story_id == record.story_id
            and seed.defect_type == record.defect_type
            and seed.location == record.location
        ]
        if matches:
            for seed in matches:
                unused.remove(seed)
                per_type[record.defect_type] += seed.instances()
                tp_instances += seed.instances()
            true_positives.append(record)
        else:
            false_positives.append(record)
            fp_instances += record.instances()
    duration = session.duration_minutes()
    return ScoredSession(
        session_id=session.session_id,
        inspector_id=session.inspector_id,
        treatment=session.treatment,
        trial=trial,
        duration_minutes=duration,
        per_type_found=per_type,
        tp_instances=tp_instances,
        fp_instances=fp_instances,
        effectiveness=effectiveness(tp_instances, key.seeded_total()),
        efficiency=efficiency(tp_instances, duration),
        true_positives=tuple(true_positives),
        false_positives=tuple(false_positives),
    )


def filter_outliers(scored: Sequence[ScoredSession]):
    """Split sessions into (kept, discarded) by the minimum-true-defect rule."""
    kept = tuple(s for s in scored if s.tp_instances >= OUTLIER_MINIMUM_TP)
    discarded = tuple(s for s in scored if s.tp_instances < OUTLIER_MINIMUM_TP)
    return kept, discarded


# ---------------------------------------------------------------------------
# bundled trial dataset


@dataclass(frozen=True)
class TrialRow:
    id: int
    trial: int
    treatment: str
    minutes: int
    found: dict  # O/A/IS/IF -> count
    total: int
    discarded: bool


def _parse_clock(value: str) -> int:
    parts = value.split(":")
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise FormatError("time must be HH:MM, got %r" % value)
    return int(parts[0]) * 60 + int(parts[1])


def load_trial_rows(source: Union[None, str, IO] = None) -> tuple:
    """Read the trial dataset CSV (bundled when ``source`` is None)."""
    if source is None:
        text = (
            resources.files("secspect.data")
            .joinpath("trial_sessions.csv")
            .read_text(encoding="utf-8")
        )
        return load_trial_rows(io.StringIO(text))
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8", newline="") as handle:
            return load_trial_rows(handle)
    reader = csv.DictReader(source)
    expected = [
        "id", "trial", "treatment", "time",
        "omission", "ambiguity", "inconsistency", "incorrect_fact",
        "total", "discarded",
    ]
    if reader.fieldnames != expected:
        raise FormatError("dataset columns must be %s" % expected)
    rows = []
    for number, raw in enumerate(reader, start=2):
        locus = "line %d" % number
        try:
            found = {
                "O": int(raw["omission"]),
                "A": int(raw["ambiguity"]),
                "IS": int(raw["inconsistency"]),
                "IF": int(raw["incorrect_fact"]),
            }
            row = TrialRow(
                id=int(raw["id"]),
                trial=int(raw["trial"]),
                treatment=raw["treatment"],
                minutes=_parse_clock(raw["time"]),
                found=found,
                total=int(raw["total"]),
                discarded={"true": True, "false": False}[raw["discarded"]],
            )
        except (KeyError, ValueError):
            raise FormatError("%s: malformed dataset row" % locus) from None
        if row.treatment not in TREATMENT_LABELS:
            raise FormatError(
                "%s: unknown treatment %r" % (locus, row.treatment)
            )
        if sum(found.values()) != row.total:
            raise FormatError("%s: per-type counts do not sum to total" % locus)
        rows.append(row)
    if not rows:
        raise FormatError("dataset has no rows")
    return tuple(rows)


def scored_from_row(row: TrialRow, key: AnswerKey) -> ScoredSession:
    """Treat one pre-counted dataset row as an already-scored session."""
    tp = sum(row.found.values())
    return ScoredSession(
        session_id="inspector-%d" % row.id,
        inspector_id=str(row.id),
        treatment=row.treatment,
        trial=row.trial,
        duration_minutes=float(row.minutes),
        per_type_found=dict(row.found),
        tp_instances=tp,
        fp_instances=0,
        effectiveness=effectiveness(tp, key.seeded_total()),
        efficiency=efficiency(tp, row.minutes),
    )


def load_trial_sessions(
    source: Union[None, str, IO] = None, key: Optional[AnswerKey] = None
) -> tuple:
    key = key or load_experiment_key()
    return tuple(scored_from_row(row, key) for row in load_trial_rows(source))


def load_experiment_key() -> AnswerKey:
    """Bundled answer key for the trial specifications (14 seeded defects)."""
    text = (
        resources.files("secspect.data")
        .joinpath("experiment_key.yaml")
        .read_text(encoding="utf-8")
    )
    return load_answer_key(io.StringIO(text))


def load_walkthrough_key() -> AnswerKey:
    """Bundled answer key for the single walkthrough story (7 seeded defects)."""
    text = (
        resources.files("secspect.data")
        .joinpath("walkthrough_key.yaml")
        .read_text(encoding="utf-8")
    )
    return load_answer_key(io.StringIO(text))


def load_reference_figures() -> dict:
    """Originally reported summary figures for the bundled dataset."""
    text = (
        resources.files("secspect.data")
        .joinpath("reference_figures.json")
        .read_text(encoding="utf-8")
    )
    return json.loads(text)


# ---------------------------------------------------------------------------
# group analysis


@dataclass(frozen=True)
class ComparisonResult:
    label: str  # "trial 1" ... or "pooled"
    metric: str  # effectiveness | efficiency
    treatment_a: str
    treatment_b: str
    comparison: GroupComparison
    median_a: float
    median_b: float


@dataclass(frozen=True)
class MeanRow:
    trial: Optional[int]
    treatment: str
    subjects: int
    mean_effectiveness_pct: float
    mean_defects_per_hour: float


@dataclass(frozen=True)
class MetricsReport:
    group_by: str  # trial | treatment
    alpha: float
    outlier_filter: bool
    scored: tuple  # kept sessions
    discarded: tuple
    comparisons: tuple  # ComparisonResult, effectiveness then efficiency
    distribution: dict  # treatment -> {type or "total": mean detection pct}
    means: tuple  # MeanRow, sorted by mean defects/hour descending


def _metric_values(sessions, metric):
    return [getattr(s, metric) for s in sessions]


def _compare(label, metric, exp, ctrl, treatment_b, alpha):
    values_a = _metric_values(exp, metric)
    values_b = _metric_values(ctrl, metric)
    return ComparisonResult(
        label=label,
        metric=metric,
        treatment_a="our_approach",
        treatment_b=treatment_b,
        comparison=mann_whitney(values_a, values_b, alpha=alpha),
        median_a=statistics.median(values_a),
        median_b=statistics.median(values_b),
    )


def _trial_comparisons(scored, metric, alpha):
    if any(s.trial is None for s in scored):
        raise EmptyGroup("trial grouping needs a trial label on every session")
    results = []
    for trial in sorted({s.trial for s in scored}):
        members = [s for s in scored if s.trial == trial]
        exp = [s for s in members if s.treatment == "our_approach"]
        ctrl = [s for s in members if s.treatment != "our_approach"]
        if not exp or not ctrl:
            raise EmptyGroup(
                "trial %s has an empty experimental or control group" % trial
            )
        controls = sorted({s.treatment for s in ctrl})
        label = "trial %d" % trial
        results.append(
            _compare(label, metric, exp, ctrl, "+".join(controls), alpha)
        )
    return results


def _treatment_comparisons(scored, metric, alpha):
    exp = [s for s in scored if s.treatment == "our_approach"]
    if not exp:
        raise EmptyGroup("no sessions under the experimental treatment")
    results = []
    for treatment in ("owasp_only", "pbr_black_hat"):
        ctrl = [s for s in scored if s.treatment == treatment]
        if ctrl:
            results.append(
                _compare("pooled", metric, exp, ctrl, treatment, alpha)
            )
    if not results:
        raise EmptyGroup("no sessions under any control treatment")
    return results


def type_distribution(scored: Sequence[ScoredSession], key: AnswerKey) -> dict:
    """Mean per-type detection percentage by treatment.

    For each treatment and defect type: the mean over its sessions of
    (instances found of that type / instances seeded of that type), as a
    percentage. The "total" entry uses the grand seeded total. Types the key
    never seeds have no detection share and map to None.
    """
    totals = key.totals_by_type()
    seeded_total = key.seeded_total()
    table: dict = {}
    for treatment in sorted({s.treatment for s in scored}):
        members = [s for s in scored if s.treatment == treatment]
        shares = {}
        for code in DEFECT_TYPES:
            if totals[code] == 0:
                shares[code] = None
                continue
            shares[code] = 100.0 * statistics.mean(
                s.per_type_found[code] / totals[code] for s in members
            )
        shares["total"] = 100.0 * statistics.mean(
            s.tp_instances / seeded_total for s in members
        )
        table[treatment] = shares
    return table


def _mean_rows(scored, group_by):
    keys = sorted(
        {(s.trial, s.treatment) for s in scored}
        if group_by == "trial"
        else {(None, s.treatment) for s in scored},
        key=lambda k: (k[0] or 0, k[1]),
    )
    rows = []
    for trial, treatment in keys:
        members = [
            s
            for s in scored
            if s.treatment == treatment and (group_by != "trial" or s.trial == trial)
        ]
        rows.append(
            MeanRow(
                trial=trial,
                treatment=treatment,
                subjects=len(members),
                mean_effectiveness_pct=100.0
                * statistics.mean(s.effectiveness for s in members),
                mean_defects_per_hour=statistics.mean(
                    s.efficiency for s in members
                ),
            )
        )
    rows.sort(key=lambda r: -r.mean_defects_per_hour)
    return tuple(rows)


def build_report(
    scored: Sequence[ScoredSession],
    key: AnswerKey,
    group_by: str = "trial",
    alpha: float = 0.05,
    outlier_filter: bool = True,
) -> MetricsReport:
    """Full analysis over scored sessions: filter, compare, tabulate."""
    if group_by not in ("trial", "treatment"):
        raise ValueError("group_by must be 'trial' or 'treatment'")
    if outlier_filter:
        kept, discarded = filter_outliers(scored)
    else:
        kept, discarded = tuple(scored), ()
    if not kept:
        raise EmptyGroup("no sessions left to analyze")
    comparer = (
        _trial_comparisons if group_by == "trial" else _treatment_comparisons
    )
    comparisons = []
    for metric in ("effectiveness", "efficiency"):
        comparisons.extend(comparer(kept, metric, alpha))
    return MetricsReport(
        group_by=group_by,
        alpha=alpha,
        outlier_filter=outlier_filter,
        scored=kept,
        discarded=tuple(discarded),
        comparisons=tuple(comparisons),
        distribution=type_distribution(kept, key),
        means=_mean_rows(kept, group_by),
    )


# ---------------------------------------------------------------------------
# report serialization


def scored_to_payload(scored: ScoredSession) -> dict:
    from .session import record_to_payload

    return {
        "session_id": scored.session_id,
        "inspector_id": scored.inspector_id,
        "treatment": scored.treatment,
        "trial": scored.trial,
        "duration_minutes": scored.duration_minutes,
        "per_type_found": dict(scored.per_type_found),
        "tp_instances": scored.tp_instances,
        "fp_instances": scored.fp_instances,
        "effectiveness": scored.effectiveness,
        "efficiency": scored.efficiency,
        "true_positives": [record_to_payload(r) for r in scored.true_positives],
        "false_positives": [record_to_payload(r) for r in scored.false_positives],
    }


def scored_from_payload(payload: dict) -> ScoredSession:
    from .session import record_from_payload

    return ScoredSession(
        session_id=payload["session_id"],
        inspector_id=payload["inspector_id"],
        treatment=payload["treatment"],
        trial=payload["trial"],
        duration_minutes=payload["duration_minutes"],
        per_type_found=dict(payload["per_type_found"]),
        tp_instances=payload["tp_instances"],
        fp_instances=payload["fp_instances"],
        effectiveness=payload["effectiveness"],
        efficiency=payload["efficiency"],
        true_positives=tuple(
            record_from_payload(r) for r in payload["true_positives"]
        ),
        false_positives=tuple(
            record_from_payload(r) for r in payload["false_positives"]
        ),
    )


def _comparison_to_payload(result: ComparisonResult) -> dict:
    comparison = result.comparison
    return {
        "label": result.label,
        "metric": result.metric,
        "treatment_a": result.treatment_a,
        "treatment_b": result.treatment_b,
        "group_a": list(comparison.group_a),
        "group_b": list(comparison.group_b),
        "u_statistic": comparison.u_statistic,
        "p_value": comparison.p_value,
        "effect_size": comparison.effect_size,
        "method": comparison.method,
        "alpha": comparison.alpha,
        "median_a": result.median_a,
        "median_b": result.median_b,
    }


def _comparison_from_payload(payload: dict) -> ComparisonResult:
    return ComparisonResult(
        label=payload["label"],
        metric=payload["metric"],
        treatment_a=payload["treatment_a"],
        treatment_b=payload["treatment_b"],
        comparison=GroupComparison(
            group_a=tuple(payload["group_a"]),
            group_b=tuple(payload["group_b"]),
            u_statistic=payload["u_statistic"],
            p_value=payload["p_value"],
            effect_size=payload["effect_size"],
            method=payload["method"],
            alpha=payload["alpha"],
        ),
        median_a=payload["median_a"],
        median_b=payload["median_b"],
    )


def report_to_payload(report: MetricsReport) -> dict:
    return {
        "group_by": report.group_by,
        "alpha": report.alpha,
        "outlier_filter": report.outlier_filter,
        "scored": [scored_to_payload(s) for s in report.scored],
        "discarded": [scored_to_payload(s) for s in report.discarded],
        "comparisons": [_comparison_to_payload(c) for c in report.comparisons],
        "distribution": {
            treatment: dict(shares)
            for treatment, shares in report.distribution.items()
        },
        "means": [
            {
                "trial": row.trial,
                "treatment": row.treatment,
                "subjects": row.subjects,
                "mean_effectiveness_pct": row.mean_effectiveness_pct,
                "mean_defects_per_hour": row.mean_defects_per_hour,
            }
            for row in report.means
        ],
    }


def report_from_payload(payload: dict) -> MetricsReport:
    expected = {
        "group_by", "alpha", "outlier_filter", "scored", "discarded",
        "comparisons", "distribution", "means",
    }
    if not isinstance(payload, dict) or set(payload) != expected:
        raise FormatError("report payload must have keys %s" % sorted(expected))
    return MetricsReport(
        group_by=payload["group_by"],
        alpha=payload["alpha"],
        outlier_filter=payload["outlier_filter"],
        scored=tuple(scored_from_payload(s) for s in payload["scored"]),
        discarded=tuple(scored_from_payload(s) for s in payload["discarded"]),
        comparisons=tuple(
            _comparison_from_payload(c) for c in payload["comparisons"]
        ),
        distribution={
            treatment: dict(shares)
            for treatment, shares in payload["distribution"].items()
        },
        means=tuple(
            MeanRow(
                trial=row["trial"],
                treatment=row["treatment"],
                subjects=row["subjects"],
                mean_effectiveness_pct=row["mean_effectiveness_pct"],
                mean_defects_per_hour=row["mean_defects_per_hour"],
            )
            for row in payload["means"]
        ),
    )


# ---------------------------------------------------------------------------
# reproduction against the reported reference figures


@dataclass(frozen=True)
class Deviation:
    quantity: str
    computed: float
    reference: float

    def delta(self) -> float:
        return self.computed - self.reference


def _comparison_by(report, metric, trial):
    for result in report.comparisons:
        if result.metric == metric and result.label == "trial %d" % trial:
            return result
    raise KeyError((metric, trial))


def build_deviations(report: MetricsReport, reference: dict):
    """Compare a computed report against the reported reference figures."""
    deviations = []
    for metric in ("effectiveness", "efficiency"):
        for trial_key, reported in sorted(reference["p_values"][metric].items()):
            trial = int(trial_key)
            computed = _comparison_by(report, metric, trial).comparison.p_value
            deviations.append(
                Deviation("p %s trial %d" % (metric, trial), computed, reported)
            )
        for trial_key, reported in sorted(reference["effect_sizes"][metric].items()):
            trial = int(trial_key)
            computed = _comparison_by(report, metric, trial).comparison.effect_size
            deviations.append(
                Deviation("d %s trial %d" % (metric, trial), computed, reported)
            )
    mean_by_key = {(row.trial, row.treatment): row for row in report.means}
    for entry in reference["ranking"]:
        row = mean_by_key.get((entry["trial"], entry["treatment"]))
        if row is None:
            continue
        label = "trial %d %s" % (entry["trial"], entry["treatment"])
        deviations.append(
            Deviation(
                "mean defects/hour %s" % label,
                row.mean_defects_per_hour,
                entry["defects_per_hour"],
            )
        )
        deviations.append(
            Deviation(
                "mean effectiveness pct %s" % label,
                row.mean_effectiveness_pct,
                entry["effectiveness_pct"],
            )
        )
    for treatment, reported_shares in sorted(reference["distribution"].items()):
        computed_shares = report.distribution.get(treatment)
        if computed_shares is None:
            continue
        for code in list(DEFECT_TYPES) + ["total"]:
            deviations.append(
                Deviation(
                    "distribution %s %s" % (treatment, code),
                    computed_shares[code],
                    reported_shares[code],
                )
            )
    return tuple(deviations)


# ---------------------------------------------------------------------------
# text rendering


def _comparison_lines(report):
    lines = [
        "Group comparisons (Mann-Whitney two-sided, Cohen's d, "
        "alpha %.2f)" % report.alpha,
        "| group | metric | n | U | p | method | d | medians | significant |",
        "| --- | --- | --- | --- | --- | --- | --- | --- | --- |",
    ]
    for result in report.comparisons:
        comparison = result.comparison
        effect = (
            "%.3f" % comparison.effect_size
            if comparison.effect_size is not None
            else "n/a"
        )
        lines.append(
            "| %s | %s | %d/%d | %.1f | %.4f | %s | %s | %.3f/%.3f | %s |"
            % (
                result.label,
                result.metric,
                len(comparison.group_a),
                len(comparison.group_b),
                comparison.u_statistic,
                comparison.p_value,
                comparison.method,
                effect,
                result.median_a,
                result.median_b,
                "yes" if comparison.significant() else "no",
            )
        )
    return lines


def render_report(report: MetricsReport) -> str:
    """Tabular text rendering of a metrics report (deterministic)."""
    lines = [
        "Metrics report (group by %s, outlier filter %s)"
        % (report.group_by, "on" if report.outlier_filter else "off"),
        "Sessions analyzed: %d (discarded as outliers: %d)"
        % (len(report.scored), len(report.discarded)),
        "",
    ]
    lines.extend(_comparison_lines(report))
    lines.append("")
    lines.append("Mean performance (sorted by defects per hour)")
    lines.append(
        "| rank | group | treatment | subjects | effectiveness % | defects/hour |"
    )
    lines.append("| --- | --- | --- | --- | --- | --- |")
    for rank, row in enumerate(report.means, start=1):
        group = "trial %d" % row.trial if row.trial is not None else "pooled"
        lines.append(
            "| %d | %s | %s | %d | %.1f | %.0f |"
            % (
                rank,
                group,
                TREATMENT_LABELS.get(row.treatment, row.treatment),
                row.subjects,
                row.mean_effectiveness_pct,
                row.mean_defects_per_hour,
            )
        )
    lines.append("")
    lines.append("Defect detection by type (% of seeded instances found)")
    lines.append("| treatment | O | A | IS | IF | total |")
    lines.append("| --- | --- | --- | --- | --- | --- |")
    for treatment, shares in sorted(report.distribution.items()):
        cells = [
            "-" if shares[code] is None else "%.1f" % shares[code]
            for code in ("O", "A", "IS", "IF", "total")
        ]
        lines.append(
            "| %s | %s |"
            % (TREATMENT_LABELS.get(treatment, treatment), " | ".join(cells))
        )
    return "\n".join(lines) + "\n"


def _deviation_precision(quantity: str) -> int:
    if quantity.startswith("p "):
        return 4
    if quantity.startswith("d "):
        return 3
    return 1


def render_reproduction(result: dict) -> str:
    """Text rendering of a reproduction run, including reference deviations."""
    report = result["report"]
    lines = [
        "Reproduction of the bundled trial analysis",
        "Outlier filter discarded: %s"
        % ", ".join(s.session_id for s in report.discarded),
        "",
    ]
    lines.extend(_comparison_lines(report))
    lines.append("")
    lines.append("Computed vs reference figures")
    lines.append("| quantity | computed | reference | delta |")
    lines.append("| --- | --- | --- | --- |")
    for deviation in result["deviations"]:
        precision = _deviation_precision(deviation.quantity)
        pattern = "| %s | %.*f | %.*f | %+.*f |"
        lines.append(
            pattern
            % (
                deviation.quantity,
                precision,
                deviation.computed,
                precision,
                deviation.reference,
                precision,
                deviation.delta(),
            )
        )

    def _order(entries):
        return "; ".join(
            "trial %d %s"
            % (entry["trial"], TREATMENT_LABELS.get(entry["treatment"]))
            for entry in entries
        )

    lines.append("")
    lines.append("Ranking order by mean defects per hour")
    lines.append("  computed:  %s" % _order(result["computed_ranking"]))
    lines.append("  reference: %s" % _order(result["reference_ranking"]))
    lines.append("")
    lines.append("Unfiltered diagnostics (outlier filter off)")
    lines.extend(_comparison_lines(result["unfiltered"]))
    return "\n".join(lines) + "\n"


def reproduce(alpha: float = 0.05) -> dict:
    """Recompute the bundled-dataset analysis and its reference deviations.

    Returns the filtered report (the documented pipeline), an unfiltered
    variant for diagnostics, the deviation list, and the ranking orders.
    Fully deterministic: repeated runs produce identical structures.
    """
    key = load_experiment_key()
    sessions = load_trial_sessions(key=key)
    report = build_report(sessions, key, group_by="trial", alpha=alpha)
    unfiltered = build_report(
        sessions, key, group_by="trial", alpha=alpha, outlier_filter=False
    )
    reference = load_reference_figures()
    return {
        "report": report,
        "unfiltered": unfiltered,
        "deviations": build_deviations(report, reference),
        "computed_ranking": [
            {"trial": row.trial, "treatment": row.treatment} for row in report.means
        ],
        "reference_ranking": [
            {"trial": entry["trial"], "treatment": entry["treatment"]}
            for entry in reference["ranking"]
        ],
    }
