"""For importing datasets, metrics and reports."""
from .datasets import (
    CompletionKind,
    Dataset,
    dump_dataset,
    load_dataset,
    read_task_file,
    stratified_split,
)
from .metrics import (
    DatasetScore,
    EvalReport,
    ObjectiveTrace,
    evaluate,
    objective_trace,
)
from .reports import (
    CaseOutcome,
    CaseStudy,
    OutcomeReport,
    case_study_report,
    export_library,
    format_insight,
    format_taxonomy_report,
    taxonomy_report,
)
from .synthetic import (
    RuleBook,
    SyntheticCase,
    synthetic_cases,
    synthetic_provider,
    synthetic_tasks,
)

__all__ = [
    "CompletionKind",
    "Dataset",
    "dump_dataset",
    "load_dataset",
    "read_task_file",
    "stratified_split",
    "DatasetScore",
    "EvalReport",
    "ObjectiveTrace",
    "evaluate",
    "objective_trace",
    "CaseOutcome",
    "CaseStudy",
    "OutcomeReport",
    "case_study_report",
    "export_library",
    "format_insight",
    "format_taxonomy_report",
    "taxonomy_report",
    "RuleBook",
    "SyntheticCase",
    "synthetic_cases",
    "synthetic_provider",
    "synthetic_tasks",
]
