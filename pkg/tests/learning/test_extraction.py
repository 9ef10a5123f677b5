"""Test turning failed attempts into candidate insights."""
import json
import logging

from optinsight.insights.insight import InsightStatus, SupervisionMode
from optinsight.insights.taxonomy import TaxonomyPath
from optinsight.learning.extraction import extract_insights, taxonomy_views
from optinsight.library.store import LibraryStore
from optinsight.llm.gateway import Gateway
from optinsight.llm.scripted import ScriptedProvider

GOLD = SupervisionMode.GOLD_PROGRAM


def failed_attempt(solver, task, snapshot):
    attempt = solver.solve(task, snapshot)
    assert not attempt.succeeded
    return attempt


def test_extract_existing_label(seeded, solver, tasks_by_id):
    """Test a candidate filed under a seeded label."""
    task = tasks_by_id["S01"]
    attempt = failed_attempt(solver, task, seeded)
    with LibraryStore(seeded) as store:
        (candidate,) = extract_insights(
            task,
            attempt,
            task.gold_program,
            GOLD,
            solver.gateway,
            store,
            iteration=2,
        )
        assert store.snapshot.version == seeded.version
    assert candidate.taxonomy == TaxonomyPath(
        "GeneralFormulation",
        "Objective Specification",
        "Sum vs. Makespan Confusion",
    )
    assert candidate.status == InsightStatus.ACTIVE
    assert candidate.condition.startswith("Applies when")
    assert candidate.provenance.source_task_id == "S01"
    assert candidate.provenance.created_iteration == 2
    (prompt,) = solver.gateway.transcript.prompts_for("generate_insights")
    assert task.gold_program in prompt


def test_extract_new_label(seeded, solver, tasks_by_id):
    """Test that a missing label is added to the taxonomy."""
    task = tasks_by_id["S10"]
    attempt = failed_attempt(solver, task, seeded)
    with LibraryStore(seeded) as store:
        (candidate,) = extract_insights(
            task, attempt, task.gold_program, GOLD, solver.gateway, store
        )
        snapshot = store.snapshot
        views = taxonomy_views(store)
    path = TaxonomyPath(
        "DomainModeling", "Scheduling", "Precedence Constraints"
    )
    assert seeded.taxonomy.resolve(path) is None
    assert snapshot.taxonomy.resolve(path) == path
    assert snapshot.version == seeded.version + 2
    assert candidate.taxonomy == path
    assert ("Scheduling", "Precedence Constraints") in {
        (i["level1"], i["level2"]) for i in views
    }


def test_rejected_candidates(seeded, solver, tasks_by_id, caplog):
    """Test that incomplete candidates are logged and dropped."""
    items = [
        {
            "track": "GeneralFormulation",
            "level1": "Objective Specification",
            "level2": "Sum vs. Makespan Confusion",
            "condition": "",
            "explanation": "Use the maximum.",
            "example": "C >= C_j",
        },
        {
            "track": "Nowhere",
            "level1": "A",
            "level2": "B",
            "condition": "Applies when always.",
            "explanation": "Anything.",
            "example": "x",
        },
        "not an object",
    ]
    gateway = Gateway(
        ScriptedProvider({"generate_insights": json.dumps(items)})
    )
    task = tasks_by_id["S01"]
    attempt = failed_attempt(solver, task, seeded)
    with caplog.at_level(logging.WARNING):
        with LibraryStore(seeded) as store:
            candidates = extract_insights(
                task, attempt, task.gold_program, GOLD, gateway, store
            )
    assert candidates == []
    rejected = gateway.transcript.events_of("candidate_rejected")
    assert len(rejected) == 2
    assert rejected[0]["violations"] == ["condition empty"]
    assert rejected[1]["violations"][0].startswith("label not created")
    assert "Rejected candidate from task S01" in caplog.text


def test_unparseable_insights(seeded, tasks_by_id, solver):
    task = tasks_by_id["S01"]
    attempt = failed_attempt(solver, task, seeded)
    gateway = Gateway(ScriptedProvider({"generate_insights": "no insight"}))
    with LibraryStore(seeded) as store:
        candidates = extract_insights(
            task, attempt, task.gold_program, GOLD, gateway, store
        )
    assert candidates == []
    assert gateway.transcript.events_of("extraction_unparseable")
