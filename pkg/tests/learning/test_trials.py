"""Test running independent trials of a task."""
import pytest

from optinsight.insights.task import Verdict
from optinsight.learning.trials import TrialBundle, run_trials, trial_seeds


def test_trial_seeds():
    """Test that trial seeds are reproducible and differ per task."""
    assert trial_seeds("S01", 3) == trial_seeds("S01", 3)
    assert trial_seeds("S01", 3) != trial_seeds("S02", 3)
    assert trial_seeds("S01", 3, seed=1) != trial_seeds("S01", 3)
    assert trial_seeds("S01", 2) == trial_seeds("S01", 3)[:2]
    assert len(set(trial_seeds("S01", 5))) == 5


def test_run_trials(seeded, solver, tasks):
    """Test that every trial gets its own lane and seed."""
    bundle = run_trials(tasks[0], seeded, solver, n_trials=3, seed=4)
    assert bundle.task_id == "S01"
    assert [i.trial_index for i in bundle.attempts] == [0, 1, 2]
    assert not bundle.any_success
    assert not bundle.first_succeeded
    assert len(bundle.failures) == 3
    assert bundle.to_dict()["verdicts"] == ["WrongObjective"] * 3
    events = solver.gateway.transcript.events_of("attempt")
    assert sorted(i["lane"] for i in events) == [0, 1, 2]


def test_run_trials_success(lessons_snapshot, solver, tasks):
    bundle = run_trials(tasks[0], lessons_snapshot, solver, n_trials=2)
    assert bundle.any_success
    assert bundle.first_succeeded
    assert bundle.failures == ()
    assert all(i.verdict == Verdict.SUCCESS for i in bundle.attempts)


def test_trial_errors(seeded, solver, tasks):
    with pytest.raises(ValueError):
        run_trials(tasks[0], seeded, solver, n_trials=0)
    with pytest.raises(ValueError):
        TrialBundle(task_id="S01", attempts=())
