"""Test scoring and acceptance of refined conditions."""
import json
import logging

import numpy as np
import pytest

from optinsight.exceptions import EmptyEvidenceSet
from optinsight.evolution.refinement import (
    RefinementCandidate,
    ReplayCounts,
    ReplayVerdict,
    RetrievalReplay,
    SolverReplay,
    Strategy,
    baseline_score,
    propose_conditions,
    refine_insight,
    score_condition,
)
from optinsight.insights.insight import EvidenceRole, PerformanceProfile
from optinsight.llm.gateway import Gateway
from optinsight.llm.scripted import ScriptedProvider

EXCLUSION = (
    "Applies when the problem mentions 'makespan' or 'completion time' "
    "unless it mentions 'sum of'."
)


def scored(p_values, size=5):
    candidates = []
    for index, p in enumerate(p_values):
        counts = ReplayCounts(round(p * size), 0, 0, size)
        candidates.append(
            RefinementCandidate(
                1, f"Applies when case {index}.", Strategy.GENERALIZE
            ).scored(counts)
        )
    return candidates


class TableReplay(RetrievalReplay):
    """Replay answering from a table of verdicts by task id."""

    def __init__(self, verdicts):
        self.verdicts = verdicts
        self.calls = []

    def replay(self, task, snapshot, insight_id, check_success):
        condition = snapshot.insights[insight_id].condition
        self.calls.append((task.id, check_success, condition))
        return self.verdicts[task.id]


@pytest.mark.parametrize(
    "value, expected",
    [
        ("KeywordAnchor", Strategy.KEYWORD_ANCHOR),
        ("keyword anchor", Strategy.KEYWORD_ANCHOR),
        ("EXCLUSION_CLAUSE", Strategy.EXCLUSION_CLAUSE),
        ("add precondition", Strategy.ADD_PRECONDITION),
    ],
)
def test_strategy_parse(value, expected):
    assert Strategy.parse(value) == expected


def test_strategy_parse_unknown():
    with pytest.raises(ValueError):
        Strategy.parse("rewrite everything")


def test_replay_counts():
    """Test the score of replay counts."""
    assert ReplayCounts(3, 1, 1, 5).p == pytest.approx(1.0)
    assert ReplayCounts(2, 0, 0, 5).p == pytest.approx(0.4)
    assert ReplayCounts(0, 0, 0, 3).p == 0.0
    with pytest.raises(EmptyEvidenceSet):
        ReplayCounts(0, 0, 0, 0)
    with pytest.raises(ValueError):
        ReplayCounts(3, 2, 1, 5)
    with pytest.raises(ValueError):
        ReplayCounts(-1, 0, 0, 5)


def test_baseline_score():
    profile = PerformanceProfile(
        1,
        positive=frozenset({"a", "b", "c"}),
        negative=frozenset({"d"}),
        unretrieved=frozenset({"e"}),
    )
    assert baseline_score(profile) == pytest.approx(0.6)
    with pytest.raises(EmptyEvidenceSet):
        baseline_score(PerformanceProfile(1))


def test_refine_picks_the_best(lessons_snapshot):
    """Test that the best candidate above the baseline is taken."""
    insight = lessons_snapshot.insights[1]
    candidates = scored([0.6, 1.0, 0.8])
    payload = refine_insight(
        insight, None, candidates, baseline=0.6, iteration=3
    )
    assert payload.insight_id == 1
    assert payload.condition == "Applies when case 1."
    assert payload.score == pytest.approx(1.0)
    assert payload.baseline == pytest.approx(0.6)
    assert payload.iteration == 3
    assert payload.reason.startswith("Generalize: p 0.600 -> 1.000")


def test_refine_needs_strict_improvement(lessons_snapshot):
    insight = lessons_snapshot.insights[1]
    assert refine_insight(insight, None, scored([0.6]), baseline=0.6) is None
    assert refine_insight(insight, None, [], baseline=0.0) is None


def test_refine_ties_take_lower_index(lessons_snapshot):
    insight = lessons_snapshot.insights[1]
    payload = refine_insight(
        insight, None, scored([0.4, 0.8, 0.8]), baseline=0.2
    )
    assert payload.condition == "Applies when case 1."


def test_refine_unscored(lessons_snapshot):
    insight = lessons_snapshot.insights[1]
    candidate = RefinementCandidate(1, "Applies when x.", Strategy.GENERALIZE)
    with pytest.raises(ValueError):
        refine_insight(insight, None, [candidate], baseline=0.0)


def test_score_condition(lessons_snapshot, tasks_by_id, caplog):
    """Test the replay counts of each evidence role."""
    insight = lessons_snapshot.insights[1]
    profile = PerformanceProfile(
        1,
        positive=frozenset({"S01", "S02"}),
        negative=frozenset({"S03"}),
        unretrieved=frozenset({"S11", "S99"}),
    )
    replay = TableReplay(
        {
            "S01": ReplayVerdict(True, True),
            "S02": ReplayVerdict(True, False),
            "S03": ReplayVerdict(False),
            "S11": ReplayVerdict(True, True),
        }
    )
    candidate = RefinementCandidate(
        1, EXCLUSION, Strategy.EXCLUSION_CLAUSE
    )
    with caplog.at_level(logging.WARNING):
        result = score_condition(
            candidate, insight, profile, tasks_by_id, lessons_snapshot, replay
        )
    assert result.counts == ReplayCounts(1, 1, 1, 5)
    assert result.p == pytest.approx(0.6)
    assert [i[:2] for i in replay.calls] == [
        ("S01", True),
        ("S02", True),
        ("S03", False),
        ("S11", True),
    ]
    assert {i[2] for i in replay.calls} == {EXCLUSION}
    assert "Task S99 is unknown" in caplog.text
    # The snapshot itself is not changed:
    assert lessons_snapshot.insights[1].condition != EXCLUSION
    with pytest.raises(EmptyEvidenceSet):
        score_condition(
            candidate,
            insight,
            PerformanceProfile(1),
            tasks_by_id,
            lessons_snapshot,
            replay,
        )


def test_solver_replay(lessons_snapshot, solver, tasks_by_id):
    """Test replay of retrieval under a substituted condition."""
    insight = lessons_snapshot.insights[1]
    substituted = lessons_snapshot.with_insight(
        insight.with_condition(EXCLUSION, 1, "test")
    )
    replay = SolverReplay(solver)
    assert replay(tasks_by_id["S01"], substituted, 1, True) == ReplayVerdict(
        True, True
    )
    assert replay(tasks_by_id["S03"], substituted, 1, False) == ReplayVerdict(
        False
    )
    assert replay(
        tasks_by_id["S03"], lessons_snapshot, 1, True
    ) == ReplayVerdict(True, False)


def test_propose_conditions(lessons_snapshot, gateway, tasks_by_id):
    """Test the candidates proposed for a misaligned insight."""
    insight = lessons_snapshot.insights[1]
    profile = PerformanceProfile(
        1, positive=frozenset({"S01"}), negative=frozenset({"S03"})
    )
    candidates = propose_conditions(insight, profile, tasks_by_id, gateway)
    assert [i.strategy for i in candidates] == [
        Strategy.KEYWORD_ANCHOR,
        Strategy.EXCLUSION_CLAUSE,
        Strategy.MERGE_TRIGGERS,
        Strategy.ADD_PRECONDITION,
    ]
    assert candidates[1].candidate_condition == EXCLUSION
    (prompt,) = gateway.transcript.prompts_for("refine_conditions")
    assert "S03: Two ovens bake eight orders." in prompt
    two = propose_conditions(
        insight, profile, tasks_by_id, gateway, n_candidates=2
    )
    assert len(two) == 2


def test_propose_skips_aligned(lessons_snapshot, gateway, tasks_by_id):
    insight = lessons_snapshot.insights[1]
    profile = PerformanceProfile(1, positive=frozenset({"S01"}))
    assert propose_conditions(insight, profile, tasks_by_id, gateway) == []
    assert not gateway.transcript.exchanges


def test_propose_odd_answers(lessons_snapshot, tasks_by_id, caplog):
    """Test unknown strategies, empty conditions and garbled answers."""
    insight = lessons_snapshot.insights[1]
    profile = PerformanceProfile(1, negative=frozenset({"S03"}))
    answer = [
        {"strategy": "Guess", "condition": "Applies when always."},
        {"strategy": "KeywordAnchor", "condition": " "},
        "Applies when never.",
    ]
    gateway = Gateway(
        ScriptedProvider({"refine_conditions": json.dumps(answer)})
    )
    (candidate,) = propose_conditions(insight, profile, tasks_by_id, gateway)
    assert candidate.strategy == Strategy.GENERALIZE
    garbled = Gateway(ScriptedProvider({"refine_conditions": "none"}))
    with caplog.at_level(logging.WARNING):
        assert propose_conditions(insight, profile, tasks_by_id, garbled) == []
    assert "No usable refinements for insight 1" in caplog.text


def count_by_hand(roles, verdicts):
    """Count replay outcomes task by task."""
    kept = corrected = recovered = 0
    for task_id, role in roles.items():
        verdict = verdicts[task_id]
        solved = verdict.retrieved and verdict.succeeded is True
        if role == EvidenceRole.POSITIVE:
            kept += solved
        elif role == EvidenceRole.NEGATIVE:
            corrected += not verdict.retrieved
        else:
            recovered += solved
    return ReplayCounts(kept, corrected, recovered, len(roles))


@pytest.mark.parametrize("seed", range(50))
def test_score_condition_random(seed, lessons_snapshot, tasks_by_id):
    """Test scores on random evidence against a direct count."""
    rng = np.random.default_rng(seed)
    size = int(rng.integers(1, 11))
    chosen = rng.choice(sorted(tasks_by_id), size=size, replace=False)
    all_roles = list(EvidenceRole)
    roles = {
        str(i): all_roles[int(rng.integers(len(all_roles)))] for i in chosen
    }
    verdicts = {
        i: ReplayVerdict(
            bool(rng.integers(2)), [None, False, True][rng.integers(3)]
        )
        for i in roles
    }
    profile = PerformanceProfile.from_roles(1, roles.items())
    candidate = RefinementCandidate(1, EXCLUSION, Strategy.EXCLUSION_CLAUSE)
    result = score_condition(
        candidate,
        lessons_snapshot.insights[1],
        profile,
        tasks_by_id,
        lessons_snapshot,
        TableReplay(verdicts),
    )
    expected = count_by_hand(roles, verdicts)
    assert result.counts == expected
    assert result.p == pytest.approx(
        (
            expected.kept_positives
            + expected.corrected_negatives
            + expected.recovered_unretrieved
        )
        / size
    )
