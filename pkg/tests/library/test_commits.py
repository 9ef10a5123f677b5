"""Test how commits change a library snapshot."""
from dataclasses import replace

import pytest

from optinsight.exceptions import CommitRejected
from optinsight.insights.insight import EvidenceRole, InsightStatus
from optinsight.insights.taxonomy import TaxonomyPath, Track
from optinsight.library.commits import (
    AddInsight,
    AddLabel,
    Commit,
    CommitKind,
    MergeInsights,
    Origin,
    RefineCondition,
    RetireInsight,
    UpdateProfile,
    apply_commit,
)
from optinsight.library.snapshot import complexity


def add(snapshot, insight):
    return apply_commit(snapshot, Commit(AddInsight(insight)))


def test_add_insight(seeded, make_candidate):
    """Test that added insights get fresh ids and stored label names."""
    candidate = make_candidate(
        path=TaxonomyPath(
            "code implementation", "solver & api syntax", "STRICT INEQUALITIES"
        )
    )
    snapshot, first = add(seeded, candidate)
    assert first == 1
    assert snapshot.version == seeded.version + 1
    assert snapshot.insights[1].taxonomy.level2 == "Strict Inequalities"
    snapshot, second = add(snapshot, make_candidate(task_id="T2"))
    assert second == 2
    assert [i.id for i in snapshot.active_insights()] == [1, 2]
    # The input snapshot is never modified:
    assert not seeded.insights


def test_add_insight_rejected(seeded, make_candidate):
    """Test that invalid insights are not added."""
    with pytest.raises(CommitRejected, match="example empty"):
        add(seeded, make_candidate(example=" "))
    dangling = make_candidate(
        path=TaxonomyPath("DomainModeling", "Routing", "Tours")
    )
    with pytest.raises(CommitRejected, match="unresolved taxonomy path"):
        add(seeded, dangling)
    retired = replace(make_candidate(), status=InsightStatus.RETIRED)
    with pytest.raises(CommitRejected):
        add(seeded, retired)


def test_refine_condition(seeded, make_candidate):
    """Test that a refinement must improve the score."""
    snapshot, insight_id = add(seeded, make_candidate())
    refine = RefineCondition(
        insight_id, "Applies always.", 2, "Generalize", 1.0, 0.5
    )
    refined, _ = apply_commit(snapshot, Commit(refine))
    insight = refined.insights[insight_id]
    assert insight.condition == "Applies always."
    assert insight.condition_history[-1].reason == "Generalize"
    assert insight.condition_history[-1].iteration == 2
    with pytest.raises(CommitRejected, match="does not improve"):
        apply_commit(snapshot, Commit(replace(refine, score=0.5)))
    with pytest.raises(CommitRejected, match="condition empty"):
        apply_commit(snapshot, Commit(replace(refine, condition=" ")))
    with pytest.raises(CommitRejected, match="unknown insight"):
        apply_commit(snapshot, Commit(replace(refine, insight_id=99)))


def test_retire_insight(seeded, make_candidate):
    """Test that retired insights leave the active set."""
    snapshot, insight_id = add(seeded, make_candidate())
    retired, _ = apply_commit(snapshot, Commit(RetireInsight(insight_id)))
    assert retired.insights[insight_id].status == InsightStatus.RETIRED
    assert not retired.active_insights()
    assert retired.next_insight_id == insight_id + 1
    with pytest.raises(CommitRejected, match="not Active"):
        apply_commit(retired, Commit(RetireInsight(insight_id)))


def test_complexity(seeded, make_candidate):
    """Test that only Active insights count towards complexity."""
    assert complexity(seeded) == 0
    snapshot, first = add(seeded, make_candidate())
    snapshot, _ = add(snapshot, make_candidate(task_id="T2"))
    assert complexity(snapshot) == 2
    snapshot, _ = apply_commit(snapshot, Commit(RetireInsight(first)))
    assert complexity(snapshot) == 1


def test_update_profile(seeded, make_candidate):
    """Test that profile updates move tasks between roles."""
    snapshot, insight_id = add(seeded, make_candidate())
    for task_id, role in (
        ("T1", EvidenceRole.POSITIVE),
        ("T2", EvidenceRole.NEGATIVE),
        ("T1", EvidenceRole.UNRETRIEVED),
    ):
        snapshot, _ = apply_commit(
            snapshot, Commit(UpdateProfile(insight_id, task_id, role))
        )
    profile = snapshot.profile(insight_id)
    assert profile.unretrieved == {"T1"}
    assert profile.negative == {"T2"}
    assert not profile.positive
    with pytest.raises(CommitRejected):
        apply_commit(
            snapshot,
            Commit(UpdateProfile(42, "T1", EvidenceRole.POSITIVE)),
        )


def test_add_label(seeded):
    """Test that labels are added once."""
    payload = AddLabel(
        Track.DOMAIN_MODELING, "Scheduling", None, "Applies to schedules."
    )
    snapshot, insight_id = apply_commit(seeded, Commit(payload))
    assert insight_id is None
    assert snapshot.taxonomy.level1("DomainModeling", "Scheduling")
    with pytest.raises(CommitRejected, match="already exists"):
        apply_commit(snapshot, Commit(payload))


def test_merge_existing(seeded, make_candidate):
    """Test that a merge keeps every task and every insight record."""
    snapshot, target = add(seeded, make_candidate("T1"))
    snapshot, source = add(snapshot, make_candidate("T2"))
    for task_id, insight_id, role in (
        ("T1", target, EvidenceRole.POSITIVE),
        ("T2", source, EvidenceRole.POSITIVE),
        ("T3", source, EvidenceRole.NEGATIVE),
    ):
        snapshot, _ = apply_commit(
            snapshot, Commit(UpdateProfile(insight_id, task_id, role))
        )
    merge = MergeInsights(
        target_id=target,
        condition="Applies when a bound is strict.",
        explanation="Strict bounds become non-strict with a unit shift.",
        example="m.addConstr(x >= y + 1)",
        source_id=source,
        iteration=1,
    )
    merged, changed = apply_commit(snapshot, Commit(merge))
    assert changed == source
    assert len(merged.insights) == len(snapshot.insights)
    assert merged.insights[source].status == InsightStatus.MERGED
    assert merged.insights[source].merged_into == target
    kept = merged.insights[target]
    assert kept.provenance.task_ids() == ("T1", "T2")
    assert kept.condition == "Applies when a bound is strict."
    assert kept.condition_history[-1].reason == f"merged with insight {source}"
    profile = merged.profile(target)
    assert profile.positive == {"T1", "T2"}
    assert profile.negative == {"T3"}
    assert [i.id for i in merged.active_insights()] == [target]


def test_merge_candidate(seeded, make_candidate):
    """Test that a merged candidate is stored as Merged."""
    snapshot, target = add(seeded, make_candidate("T1"))
    original = snapshot.insights[target]
    merge = MergeInsights(
        target_id=target,
        condition=original.condition,
        explanation=original.explanation,
        example=original.example,
        source_insight=make_candidate("T5"),
    )
    merged, source = apply_commit(snapshot, Commit(merge))
    assert source == target + 1
    assert merged.insights[source].status == InsightStatus.MERGED
    # An unchanged condition adds no history entry:
    assert len(merged.insights[target].condition_history) == 1
    assert merged.insights[target].provenance.absorbed_task_ids == ("T5",)


def test_merge_rejected(seeded, make_candidate):
    """Test the merge preconditions."""
    snapshot, first = add(seeded, make_candidate("T1"))
    other = make_candidate(
        "T2",
        path=TaxonomyPath(
            "GeneralFormulation",
            "Variable Definition",
            "Explicit Bounds",
        ),
    )
    snapshot, second = add(snapshot, other)
    base = MergeInsights(first, "Applies.", "Explained.", "x = 1")
    with pytest.raises(CommitRejected, match="without a source"):
        apply_commit(snapshot, Commit(base))
    with pytest.raises(CommitRejected, match="into itself"):
        apply_commit(snapshot, Commit(replace(base, source_id=first)))
    with pytest.raises(CommitRejected, match="share a level-2 label"):
        apply_commit(snapshot, Commit(replace(base, source_id=second)))
    with pytest.raises(CommitRejected, match="example empty"):
        apply_commit(
            snapshot, Commit(replace(base, source_id=second, example=""))
        )


def test_commit_describe(make_candidate):
    """Test the commit summary used in logs."""
    commit = Commit(
        UpdateProfile(3, "T1", EvidenceRole.POSITIVE),
        Origin(worker_id="w1", task_id="T1"),
    )
    assert commit.kind == CommitKind.UPDATE_PROFILE
    assert commit.describe() == {
        "kind": "UpdateProfile",
        "insight_id": 3,
        "task_id": "T1",
        "origin_task": "T1",
    }
    assert Commit(AddInsight(make_candidate())).describe() == {
        "kind": "AddInsight"
    }
