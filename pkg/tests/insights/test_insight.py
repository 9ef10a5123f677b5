"""Test insights and performance profiles."""
from dataclasses import replace

import pytest

from optinsight.insights.insight import (
    EvidenceRole,
    Insight,
    InsightStatus,
    PerformanceProfile,
    Provenance,
    SupervisionMode,
)
from optinsight.insights.taxonomy import TaxonomyPath


def make_insight(**kwargs) -> Insight:
    insight = Insight.candidate(
        taxonomy=TaxonomyPath(
            "GeneralFormulation",
            "Objective Specification",
            "Sum vs. Makespan Confusion",
        ),
        condition="Applies when the problem mentions 'makespan'.",
        explanation="Minimize the largest completion time.",
        example="m.addConstrs(C_max >= C[j] for j in J)",
        provenance=Provenance("T1", SupervisionMode.GOLD_PROGRAM, 2),
    )
    return replace(insight, **kwargs)


def test_candidate():
    """Test that a candidate starts with a one-entry history."""
    insight = make_insight()
    assert insight.id == 0
    assert insight.is_active
    assert len(insight.condition_history) == 1
    revision = insight.condition_history[0]
    assert revision.condition == insight.condition
    assert revision.iteration == 2
    assert revision.reason == "extracted"


def test_with_condition():
    """Test that a new condition is appended to the history."""
    insight = make_insight()
    refined = insight.with_condition("Applies always.", 3, "generalize")
    assert refined.condition == "Applies always."
    assert [i.condition for i in refined.condition_history] == [
        insight.condition,
        "Applies always.",
    ]
    assert refined.condition_history[-1].reason == "generalize"
    assert insight.condition != refined.condition


def test_prompt_view():
    """Test the fields quoted in prompts."""
    insight = make_insight(id=4)
    view = insight.prompt_view()
    assert view["id"] == 4
    assert view["example"] == insight.example
    assert insight.prompt_view(include_example=False)["example"] == ""


def test_insight_dict():
    """Test the plain form of an insight."""
    insight = make_insight(
        id=7, status=InsightStatus.MERGED, merged_into=2
    )
    data = insight.to_dict()
    assert data["status"] == "Merged"
    assert data["provenance"]["supervision_mode"] == "GoldProgram"
    assert Insight.from_dict(data) == insight


def test_provenance_task_ids():
    """Test that absorbed tasks follow the source task once."""
    provenance = Provenance(
        "T1", SupervisionMode.ANSWER_ONLY, absorbed_task_ids=("T2", "T1")
    )
    assert provenance.task_ids() == ("T1", "T2")


def test_with_role_keeps_partition():
    """Test that a task moves between the sets of a profile."""
    profile = PerformanceProfile(1)
    profile = profile.with_role("T1", EvidenceRole.POSITIVE)
    profile = profile.with_role("T2", EvidenceRole.NEGATIVE)
    profile = profile.with_role("T1", EvidenceRole.UNRETRIEVED)
    assert profile.positive == frozenset()
    assert profile.unretrieved == {"T1"}
    assert profile.negative == {"T2"}
    assert profile.evidence == {"T1", "T2"}
    assert profile.is_disjoint()
    assert profile.role_of("T1") == EvidenceRole.UNRETRIEVED
    assert profile.role_of("T9") is None


def test_from_roles_last_role_wins():
    """Test that the latest role of a task is kept."""
    profile = PerformanceProfile.from_roles(
        3,
        [
            ("A", EvidenceRole.NEGATIVE),
            ("B", EvidenceRole.POSITIVE),
            ("A", EvidenceRole.POSITIVE),
        ],
    )
    assert profile.positive == {"A", "B"}
    assert not profile.negative


def test_union():
    """Test that a conflicting role is resolved towards negative."""
    first = PerformanceProfile.from_roles(
        1,
        [("A", EvidenceRole.POSITIVE), ("B", EvidenceRole.POSITIVE)],
    )
    second = PerformanceProfile.from_roles(
        2,
        [("B", EvidenceRole.NEGATIVE), ("C", EvidenceRole.UNRETRIEVED)],
    )
    union = first.union(second)
    assert union.insight_id == 1
    assert union.positive == {"A"}
    assert union.negative == {"B"}
    assert union.unretrieved == {"C"}
    assert union.is_disjoint()
    assert union.evidence == first.evidence | second.evidence


def test_profile_dict():
    """Test the plain form of a profile."""
    profile = PerformanceProfile.from_roles(
        5,
        [("T2", EvidenceRole.POSITIVE), ("T1", EvidenceRole.POSITIVE)],
    )
    data = profile.to_dict()
    assert data["positive"] == ["T1", "T2"]
    assert PerformanceProfile.from_dict(data) == profile


@pytest.mark.parametrize("role", list(EvidenceRole))
def test_members(role):
    """Test that every role has its own set."""
    profile = PerformanceProfile(1).with_role("T", role)
    assert profile.members(role) == {"T"}
