"""Test the validation of insights against a library."""
from dataclasses import replace

from optinsight.insights.insight import (
    ConditionRevision,
    Insight,
    InsightStatus,
    Provenance,
    SupervisionMode,
)
from optinsight.insights.taxonomy import TaxonomyPath
from optinsight.insights.validation import validate_insight
from optinsight.library.persistence import seeded_snapshot

PATH = TaxonomyPath(
    "CodeImplementation", "Solver & API Syntax", "Strict Inequalities"
)


def candidate() -> Insight:
    return Insight.candidate(
        taxonomy=PATH,
        condition="Applies when the problem mentions 'strictly'.",
        explanation="Shift strict bounds by one unit on integers.",
        example="m.addConstr(x >= y + 1)",
        provenance=Provenance("T1", SupervisionMode.GOLD_PROGRAM),
    )


def test_valid_candidate():
    """Test that a well-formed candidate has no violations."""
    report = validate_insight(candidate(), seeded_snapshot())
    assert report.valid
    assert bool(report)
    assert report.violations == ()


def test_unresolved_path():
    """Test that empty and unknown paths are violations."""
    snapshot = seeded_snapshot()
    empty = replace(
        candidate(),
        taxonomy=TaxonomyPath("CodeImplementation", "Solver & API Syntax", ""),
    )
    assert validate_insight(empty, snapshot).violations == (
        "empty taxonomy path",
    )
    unknown = replace(
        candidate(),
        taxonomy=TaxonomyPath("CodeImplementation", "Solver", "Strict"),
    )
    assert "unresolved taxonomy path" in (
        validate_insight(unknown, snapshot).violations
    )


def test_empty_fields_and_history():
    """Test the field and history checks."""
    snapshot = seeded_snapshot()
    insight = replace(candidate(), explanation=" ", example="")
    report = validate_insight(insight, snapshot)
    assert not report
    assert report.violations == ("explanation empty", "example empty")
    assert "condition history empty" in validate_insight(
        replace(candidate(), condition_history=()), snapshot
    ).violations
    drifted = replace(
        candidate(),
        condition_history=(ConditionRevision("Other.", 0, "extracted"),),
    )
    assert validate_insight(drifted, snapshot).violations == (
        "condition differs from condition history",
    )


def test_merged_needs_active_target():
    """Test that a Merged insight must point at an Active insight."""
    merged = replace(
        candidate(), id=3, status=InsightStatus.MERGED, merged_into=9
    )
    report = validate_insight(merged, seeded_snapshot())
    assert report.violations == ("merged into a missing insight",)
