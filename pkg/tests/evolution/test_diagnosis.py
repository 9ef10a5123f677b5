"""Test the diagnosis of insights against attempts."""
import logging

import numpy as np
import pytest

from optinsight.evolution.diagnosis import (
    DiagnosisRecord,
    Evidence,
    diagnose,
    find_unretrieved,
    judge_role,
)
from optinsight.exceptions import UnparseableJudgeOutput
from optinsight.insights.insight import EvidenceRole
from optinsight.insights.task import Verdict
from optinsight.library.store import LibraryStore
from optinsight.llm.gateway import Gateway
from optinsight.solving.solver import TaskSolver


@pytest.fixture
def attempts(lessons_snapshot, solver, tasks_by_id):
    """Latest attempts of a success, a misled and a missed task."""
    return [
        (tasks_by_id[i], solver.solve(tasks_by_id[i], lessons_snapshot))
        for i in ("S01", "S03", "S05")
    ]


@pytest.fixture
def anchors(tasks):
    return {i.id: i.gold_program for i in tasks if i.gold_program}


def roles(record):
    return [(i.insight_id, i.task_id, i.role) for i in record.evidence]


def test_diagnose(attempts, anchors, lessons_snapshot, solver):
    """Test the evidence of each kind of task."""
    assert [i.verdict for _, i in attempts] == [
        Verdict.SUCCESS,
        Verdict.WRONG_OBJECTIVE,
        Verdict.WRONG_OBJECTIVE,
    ]
    record = diagnose(
        attempts, lessons_snapshot, solver, anchors=anchors, iteration=2
    )
    assert roles(record) == [
        (1, "S01", EvidenceRole.POSITIVE),
        (1, "S03", EvidenceRole.NEGATIVE),
        (2, "S05", EvidenceRole.UNRETRIEVED),
    ]
    assert record.flagged() == [1, 2]
    assert record.violations() == []
    deltas = record.deltas()
    assert deltas[1].positive == {"S01"}
    assert deltas[1].negative == {"S03"}
    assert deltas[2].unretrieved == {"S05"}
    assert record.to_dict()["iteration"] == 2


def test_diagnose_commits_profiles(
    attempts, anchors, lessons_snapshot, solver
):
    """Test that findings update the stored profiles."""
    with LibraryStore(lessons_snapshot) as store:
        diagnose(attempts, lessons_snapshot, solver, anchors, store=store)
        snapshot = store.snapshot
    assert snapshot.version == lessons_snapshot.version + 3
    assert snapshot.profile(1).positive == {"S01"}
    assert snapshot.profile(1).negative == {"S03"}
    assert snapshot.profile(2).unretrieved == {"S05"}
    assert snapshot.profile(3).evidence == frozenset()


def test_diagnose_without_anchor(attempts, lessons_snapshot, solver):
    """Test that unretrieved insights need an anchor program."""
    record = diagnose(attempts, lessons_snapshot, solver)
    assert record.flagged() == [1]
    assert solver.gateway.transcript.count("diagnose_issues") == 0


def test_judge_failure(attempts, lessons_snapshot, rulebook, runner):
    """Test that an unusable judgment omits only succeeded pairs."""
    provider = rulebook.provider().on("diagnose_pos_neg", "no idea")
    solver = TaskSolver(Gateway(provider), runner)
    record = diagnose(attempts[:2], lessons_snapshot, solver)
    assert roles(record) == [(1, "S03", EvidenceRole.NEGATIVE)]
    (negative,) = record.evidence
    assert negative.check_verdict == Verdict.SUCCESS
    assert negative.rationale == ""
    assert record.violations() == []
    assert record.omitted == [{"insight_id": 1, "task_id": "S01"}]


def test_judge_role(attempts, lessons_snapshot, rulebook, runner):
    task, attempt = attempts[0]
    view = lessons_snapshot.insights[1].prompt_view()
    solver = TaskSolver(Gateway(rulebook.provider()), runner)
    assert judge_role(task, view, attempt, solver) == (
        "positive",
        "judged positive",
    )
    provider = rulebook.provider().on(
        "diagnose_pos_neg", '{"role": "helpful"}'
    )
    with pytest.raises(UnparseableJudgeOutput):
        judge_role(task, view, attempt, TaskSolver(Gateway(provider), runner))


def test_find_unretrieved(
    attempts, anchors, lessons_snapshot, solver, caplog
):
    """Test that picks are kept only if they fix the task."""
    task, attempt = attempts[2]
    assert find_unretrieved(
        task, attempt, anchors["S05"], lessons_snapshot, solver
    ) == [(2, True)]
    assert not find_unretrieved(task, attempt, None, lessons_snapshot, solver)
    provider = solver.gateway.provider.on(
        "diagnose_unretrieved", '[{"id": 1}, {"id": "x"}, {"id": 99}]'
    )
    checker = TaskSolver(Gateway(provider), solver.runner)
    with caplog.at_level(logging.INFO):
        found = find_unretrieved(
            task, attempt, anchors["S05"], lessons_snapshot, checker
        )
    assert found == []
    assert "Insight 1 does not fix task S05" in caplog.text


def test_record_violations():
    """Test the invariants of a diagnosis record."""
    record = DiagnosisRecord(
        iteration=1,
        evidence=[
            Evidence(1, "T1", EvidenceRole.POSITIVE),
            Evidence(1, "T1", EvidenceRole.NEGATIVE, Verdict.SUCCESS),
            Evidence(
                2, "T2", EvidenceRole.UNRETRIEVED, Verdict.WRONG_OBJECTIVE
            ),
        ],
    )
    assert record.violations() == [
        "conflicting roles for (1, 'T1')",
        "Unretrieved evidence for (2, 'T2') lacks a successful re-solve",
    ]


@pytest.mark.parametrize("seed", range(50))
def test_record_partition_random(seed):
    """Test the partition of random records into disjoint roles."""
    rng = np.random.default_rng(seed)
    all_roles = list(EvidenceRole)
    checks = [Verdict.SUCCESS, Verdict.WRONG_OBJECTIVE, None]
    evidence = [
        Evidence(
            int(rng.integers(1, 4)),
            f"T{rng.integers(6)}",
            all_roles[int(rng.integers(len(all_roles)))],
            checks[int(rng.integers(len(checks)))],
        )
        for _ in range(int(rng.integers(1, 15)))
    ]
    record = DiagnosisRecord(iteration=1, evidence=evidence)
    latest = {(i.insight_id, i.task_id): i.role for i in evidence}
    deltas = record.deltas()
    assert sorted(deltas) == sorted({i for i, _ in latest})
    for insight_id, profile in deltas.items():
        assert profile.is_disjoint()
        tasks = {t for i, t in latest if i == insight_id}
        assert profile.evidence == tasks
        for task_id in tasks:
            assert profile.role_of(task_id) == latest[insight_id, task_id]
    assert record.flagged() == sorted(
        {i for (i, _), role in latest.items() if role != EvidenceRole.POSITIVE}
    )
    conflicting = any(
        len({j.role for j in evidence if j.insight_id == i and j.task_id == t})
        > 1
        for i, t in latest
    )
    unbacked = any(
        i.role != EvidenceRole.POSITIVE and i.check_verdict != Verdict.SUCCESS
        for i in evidence
    )
    assert bool(record.violations()) == (conflicting or unbacked)
