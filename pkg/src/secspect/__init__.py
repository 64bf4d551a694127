"""Security reading-technique generator and inspection harness.

From agile user stories to review artifacts: keyword extraction, security
property mapping, OWASP high-level requirement linking, defect reporting
forms, timed inspection sessions, and the metrics pipeline that scores them.
"""

from .analytics import (
    AnswerKey,
    ComparisonResult,
    MeanRow,
    MetricsReport,
    ScoredSession,
    SeededDefect,
    build_report,
    effectiveness,
    efficiency,
    filter_outliers,
    load_answer_key,
    load_experiment_key,
    load_reference_figures,
    load_trial_rows,
    load_trial_sessions,
    load_walkthrough_key,
    render_report,
    render_reproduction,
    reproduce,
    score_session,
    type_distribution,
)
from .catalog import (
    PROPERTIES,
    PROPERTY_ORDER,
    REQUIREMENTS,
    HighLevelRequirement,
    Lexicon,
    LexiconEntry,
    SecurityProperty,
    builtin_lexicon,
    link_requirements,
    load_lexicon,
    map_properties,
    render_rewritten,
)
from .corpus import (
    SecuritySpecification,
    SpecificationDocument,
    UserStory,
    load_document,
    load_experiment_document,
    load_walkthrough_document,
    parse_user_story,
)
from .extraction import ExtractionResult, extract_keywords, normalize_token
from .session import (
    DefectRecord,
    InspectionSession,
    TimeLimitWarning,
    delete_defect,
    finish_session,
    record_defect,
    start_session,
)
from .stats import GroupComparison, cohens_d, mann_whitney
from .technique import (
    DEFECT_TYPES,
    VERIFICATION_QUESTIONS,
    BaselineChecklist,
    DefectReportingForm,
    TechniquePackage,
    VerificationQuestion,
    baseline_checklist,
    generate_package,
    parse_form_document,
    render_form,
)

__version__ = "0.1.0"
