"""For importing the core domain types."""
from .insight import (
    ConditionRevision,
    EvidenceRole,
    Insight,
    InsightStatus,
    PerformanceProfile,
    Provenance,
    SupervisionMode,
)
from .task import Attempt, Task, Verdict
from .taxonomy import LabelLevel, LabelNode, Taxonomy, TaxonomyPath, Track
from .validation import ValidationReport, validate_insight

__all__ = [
    "Attempt",
    "ConditionRevision",
    "EvidenceRole",
    "Insight",
    "InsightStatus",
    "LabelLevel",
    "LabelNode",
    "PerformanceProfile",
    "Provenance",
    "SupervisionMode",
    "Task",
    "Taxonomy",
    "TaxonomyPath",
    "Track",
    "ValidationReport",
    "Verdict",
    "validate_insight",
]
