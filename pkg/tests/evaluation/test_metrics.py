"""Test success rates and the library objective."""
import json
from types import SimpleNamespace

import pytest

from optinsight.evaluation.metrics import (
    EvalReport,
    evaluate,
    objective_trace,
)
from optinsight.insights.task import Attempt, Task, Verdict


def make_report(outcomes):
    """Build a report from (source, succeeded) pairs."""
    tasks, attempts = [], []
    for index, (source, succeeded) in enumerate(outcomes):
        task = Task(f"t{index}", source, "A problem.", "1")
        tasks.append(task)
        verdict = Verdict.SUCCESS if succeeded else Verdict.WRONG_OBJECTIVE
        attempts.append(Attempt(task.id, 0, (), (), "", "", None, verdict))
    return EvalReport.from_attempts(tasks, attempts)


def test_micro_and_macro():
    """Test the averages over two datasets of different size."""
    report = make_report(
        [
            ("A", True),
            ("A", True),
            ("B", True),
            ("B", False),
            ("B", False),
            ("B", False),
        ]
    )
    assert report.micro == pytest.approx(0.5)
    assert report.macro == pytest.approx(0.625)
    assert [(i.name, i.successes, i.total) for i in report.datasets] == [
        ("A", 2, 2),
        ("B", 1, 4),
    ]
    assert report.to_dict()["datasets"]["B"]["rate"] == pytest.approx(0.25)


def test_empty_report():
    report = make_report([])
    assert report.micro is None
    assert report.macro is None
    assert report.success_rate() == 0.0


def test_objective_trace():
    """Test F = success rate - lambda * Omega."""
    report = make_report([("A", True)] * 4 + [("A", False)])
    library = SimpleNamespace(active_insights=lambda: list(range(10)))
    trace = objective_trace(library, report, lam=0.01, iteration=2)
    assert trace.success_rate == pytest.approx(0.8)
    assert trace.omega == 10
    assert trace.F == pytest.approx(0.7)
    assert trace.to_dict()["lambda"] == 0.01
    assert objective_trace(library, report).F == pytest.approx(0.8)
    with pytest.raises(ValueError):
        objective_trace(library, report, lam=-0.1)


def test_evaluate(lessons_snapshot, solver, tasks, tmp_path):
    """Test an evaluation run over the synthetic corpus."""
    report = evaluate(
        lessons_snapshot, tasks, solver, workers=3, header={"arm": "on"}
    )
    failed = sorted(
        i for i, j in report.verdicts.items() if j != Verdict.SUCCESS
    )
    assert failed == ["S03", "S05"]
    assert report.successes == 10
    assert report.total == 12
    assert report.header["library_checksum"] == lessons_snapshot.checksum()
    assert report.header["provider"] == "Scripted"
    assert report.header["arm"] == "on"
    assert [i.task_id for i in report.attempts] == [i.id for i in tasks]
    report.save(tmp_path / "eval.json")
    saved = json.loads((tmp_path / "eval.json").read_text(encoding="utf-8"))
    assert saved["micro"] == pytest.approx(10 / 12)
    assert saved["verdicts"]["S03"] == "WrongObjective"
