"""A small synthetic corpus and the scripted model that solves it.

The corpus has twelve tasks built around five modeling lessons. The
rule book answers every prompt template from the rendered prompt: a
task is solved when the insights teaching its lessons are injected and
no misleading insight is, so the whole learning and evolution cycle
runs offline and deterministically.

Conditions written by the rule book look like::

    Applies when the problem mentions 'a' or 'b' unless it mentions 'c'.

and retrieval by the rule book applies exactly that rule to the task
description.
"""
from __future__ import annotations

import json
import re
from collections.abc import Sequence
from dataclasses import dataclass

from optinsight.insights.task import Task
from optinsight.insights.taxonomy import Track, label_key
from optinsight.llm.providers import CompletionRequest
from optinsight.llm.scripted import ScriptedProvider

SOURCES = ("alpha", "beta", "gamma", "delta")

LABEL_LINE = re.compile(r"^- (.+?) / (.+?) / (.+?): ", re.MULTILINE)
CANDIDATE_LINE = re.compile(r"^- id (\d+): (.*)$", re.MULTILINE)
QUOTED = re.compile(r"'([^']+)'")
INSIGHT_BLOCK = re.compile(
    r"### Insight (\d+)\nCondition: (.*)\nExplanation: (.*)\nExample:\n(.*)"
)


def lesson_condition(
    terms: Sequence[str], exclusions: Sequence[str] = ()
) -> str:
    """Write a condition in the form the rule book understands."""
    text = "Applies when the problem mentions " + " or ".join(
        f"'{i}'" for i in terms
    )
    if exclusions:
        text += " unless it mentions " + " or ".join(
            f"'{i}'" for i in exclusions
        )
    return text + "."


def condition_holds(condition: str, description: str) -> bool:
    """Apply a quoted-term condition to a task description."""
    include, _, exclude = condition.partition(" unless ")
    text = description.lower()
    terms = [i.lower() for i in QUOTED.findall(include)]
    blocked = [i.lower() for i in QUOTED.findall(exclude)]
    return any(i in text for i in terms) and not any(
        i in text for i in blocked
    )


@dataclass(frozen=True)
class Lesson:
    """A modeling lesson the synthetic tasks depend on."""

    key: str
    track: Track
    level1: str
    level2: str
    level1_condition: str
    level2_condition: str
    terms: tuple[str, ...]
    explanation: str
    example: str
    issue: str
    anchors: tuple[str, ...] = ()  # Signals the first condition misses.
    exclusions: tuple[str, ...] = ()  # Signals of misleading use.

    @property
    def condition(self) -> str:
        return lesson_condition(self.terms)

    def label_terms(self) -> tuple[str, ...]:
        return self.terms + self.anchors

    def to_item(self) -> dict[str, str]:
        """The insight as the extraction prompt asks for it."""
        return {
            "track": self.track.value,
            "level1": self.level1,
            "level1_condition": self.level1_condition,
            "level2": self.level2,
            "level2_condition": self.level2_condition,
            "condition": self.condition,
            "explanation": self.explanation,
            "example": self.example,
        }

    def refinements(self) -> list[dict[str, str]]:
        """Candidate conditions, one per strategy."""
        return [
            {
                "strategy": "KeywordAnchor",
                "condition": lesson_condition(self.terms + self.anchors),
            },
            {
                "strategy": "ExclusionClause",
                "condition": lesson_condition(self.terms, self.exclusions),
            },
            {
                "strategy": "MergeTriggers",
                "condition": lesson_condition(
                    self.terms + self.anchors, self.exclusions
                ),
            },
            {
                "strategy": "AddPrecondition",
                "condition": lesson_condition(self.terms[:1]),
            },
        ]


LESSONS = (
    Lesson(
        key="makespan",
        track=Track.GENERAL_FORMULATION,
        level1="Objective Specification",
        level2="Sum vs. Makespan Confusion",
        level1_condition=(
            "Applies when the wording of the goal admits several "
            "mathematical objectives."
        ),
        level2_condition=(
            "Applies when activities run in parallel and the goal is "
            "the finishing time of the last one."
        ),
        terms=("makespan", "completion time"),
        exclusions=("sum of",),
        explanation=(
            "Minimize an auxiliary makespan variable bounded below by "
            "every finishing time instead of adding the finishing times."
        ),
        example="C_max >= C_j for all jobs j; minimize C_max",
        issue="The objective adds finishing times instead of the maximum.",
    ),
    Lesson(
        key="bigm",
        track=Track.DOMAIN_MODELING,
        level1="Facility Location",
        level2="Fixed Charge (Big-M Linking)",
        level1_condition=(
            "Applies when facilities may be opened and customers are "
            "served from the open ones."
        ),
        level2_condition=(
            "Applies when flow is allowed only through a facility that "
            "is opened."
        ),
        terms=("opened", "fixed cost"),
        anchors=("built",),
        explanation=(
            "Link the flow through each facility to its binary open "
            "variable with a big-M bound and charge the setup on the "
            "binary."
        ),
        example="x_ij <= M * y_i; cost += f_i * y_i",
        issue="Flow through a closed facility is not forbidden.",
    ),
    Lesson(
        key="integer",
        track=Track.GENERAL_FORMULATION,
        level1="Variable Definition",
        level2="Continuous vs. Discrete Confusion",
        level1_condition=(
            "Applies when the domain of the decision variables matters "
            "for correctness."
        ),
        level2_condition=(
            "Applies when decisions count indivisible units."
        ),
        terms=("whole", "indivisible"),
        explanation=(
            "Declare counts of indivisible units as integer variables "
            "rather than continuous ones."
        ),
        example="n = model.addVar(vtype=GRB.INTEGER)",
        issue="A count of units is modeled as a continuous variable.",
    ),
    Lesson(
        key="strict",
        track=Track.CODE_IMPLEMENTATION,
        level1="Solver & API Syntax",
        level2="Strict Inequalities",
        level1_condition=(
            "Applies when the model must be expressed through the "
            "modelling API of a solver."
        ),
        level2_condition=(
            "Applies when the model has strict inequalities."
        ),
        terms=("strictly",),
        explanation=(
            "Replace a strict inequality by a non-strict one shifted by "
            "a small epsilon before passing it to the solver."
        ),
        example="model.addConstr(a >= b + 1e-6)",
        issue="A strict inequality is passed to the solver unchanged.",
    ),
    Lesson(
        key="precedence",
        track=Track.DOMAIN_MODELING,
        level1="Scheduling",
        level2="Precedence Constraints",
        level1_condition=(
            "Applies when activities are sequenced in time on shared "
            "resources."
        ),
        level2_condition=(
            "Applies when one activity can only start once another one "
            "has finished."
        ),
        terms=("before", "precedes"),
        explanation=(
            "Add a start-time constraint for every ordered pair so the "
            "successor starts after its predecessor finishes."
        ),
        example="S_b >= S_a + p_a",
        issue="An ordering requirement between two activities is missing.",
    ),
)


@dataclass(frozen=True)
class SyntheticCase:
    """A task with the lessons it needs and the ones that mislead it."""

    task: Task
    needs: tuple[str, ...] = ()
    harmed_by: tuple[str, ...] = ()
    broken_first: bool = False  # First programs crash until repaired.
    kind: str = "LP"  # Answer of the problem-type classifier.


def _case(
    task_id: str,
    source: str,
    description: str,
    answer: str,
    needs: tuple[str, ...] = (),
    harmed_by: tuple[str, ...] = (),
    gold: bool = True,
    broken_first: bool = False,
    problem_type: str | None = "LP",
    kind: str = "LP",
) -> SyntheticCase:
    return SyntheticCase(
        task=Task(
            id=task_id,
            source_dataset=source,
            description=description,
            answer=answer,
            gold_program=(
                program_text(task_id, float(answer)) if gold else None
            ),
            problem_type=problem_type,
        ),
        needs=needs,
        harmed_by=harmed_by,
        broken_first=broken_first,
        kind=kind,
    )


def program_text(task_id: str, value: float, broken: bool = False) -> str:
    """Return a tiny program printing an objective value."""
    lines = [f'"""Synthetic model of task {task_id}."""']
    if broken:
        lines.append('raise RuntimeError("solver setup failed")  # BUG')
    lines += [
        f"objective = {value!r}",
        'print(f"OPTIMAL_OBJECTIVE={objective}")',
    ]
    return "\n".join(lines) + "\n"


def synthetic_cases() -> list[SyntheticCase]:
    """The twelve cases of the synthetic corpus."""
    return [
        _case(
            "S01",
            "alpha",
            "Three machines process ten jobs in parallel. Minimize the "
            "makespan of the schedule.",
            "42",
            needs=("makespan",),
        ),
        _case(
            "S02",
            "alpha",
            "Four crews renovate six sites at the same time. Minimize "
            "the latest completion time over all sites.",
            "18.5",
            needs=("makespan",),
        ),
        _case(
            "S03",
            "alpha",
            "Two ovens bake eight orders. Minimize the sum of "
            "completion times of all orders.",
            "64",
            harmed_by=("makespan",),
        ),
        _case(
            "S04",
            "beta",
            "A retailer chooses which of five warehouses are opened. "
            "Each open warehouse has a fixed cost and serves nearby "
            "stores. Minimize the total cost.",
            "1250",
            needs=("bigm",),
            problem_type="MILP",
        ),
        _case(
            "S05",
            "beta",
            "A utility decides which substations are built. Power may "
            "only flow through a new substation, and each one has a "
            "setup charge. Minimize the total cost.",
            "930",
            needs=("bigm",),
            problem_type="MILP",
        ),
        _case(
            "S06",
            "beta",
            "A bakery produces bread in whole batches for three shops. "
            "Minimize the number of ovens used.",
            "36",
            needs=("integer",),
            gold=False,
            problem_type="IP",
        ),
        _case(
            "S07",
            "gamma",
            "Trucks are indivisible units. Choose how many trucks to "
            "lease to carry the monthly freight at minimum cost.",
            "7",
            needs=("integer",),
            problem_type="IP",
        ),
        _case(
            "S08",
            "gamma",
            "A plant makes products A and B. Output of A must be "
            "strictly greater than output of B. Maximize profit.",
            "88",
            needs=("strict",),
        ),
        _case(
            "S09",
            "gamma",
            "A farmer allocates land between wheat and corn to maximize "
            "profit under a water limit.",
            "600",
            gold=False,
        ),
        _case(
            "S10",
            "delta",
            "A project has five tasks; task A precedes task B and task C. "
            "Minimize the project duration.",
            "27",
            needs=("precedence",),
            problem_type="MILP",
        ),
        _case(
            "S11",
            "delta",
            "Painting must end before assembly can start on each of "
            "four cars. Minimize the finishing time of the last car.",
            "33",
            needs=("precedence",),
            problem_type="MILP",
        ),
        _case(
            "S12",
            "delta",
            "A refinery blends two crude oils to meet an octane "
            "requirement at minimum cost.",
            "410",
            broken_first=True,
            problem_type=None,
            kind="LP",
        ),
    ]


def synthetic_tasks() -> list[Task]:
    """The tasks of the synthetic corpus."""
    return [i.task for i in synthetic_cases()]


def _fence(program: str) -> str:
    return f"```python\n{program}```"


class RuleBook:
    """Compute the model's answers for the synthetic corpus."""

    def __init__(
        self,
        cases: Sequence[SyntheticCase] | None = None,
        lessons: Sequence[Lesson] = LESSONS,
    ):
        self.cases = list(cases if cases is not None else synthetic_cases())
        self.lessons = {i.key: i for i in lessons}

    def case_in(self, prompt: str) -> SyntheticCase | None:
        for case in self.cases:
            if case.task.description in prompt:
                return case
        return None

    def lessons_in(self, text: str) -> set[str]:
        return {
            key
            for key, lesson in self.lessons.items()
            if lesson.explanation in text
        }

    def lesson_of(self, explanation: str) -> Lesson | None:
        for lesson in self.lessons.values():
            if lesson.explanation == explanation.strip():
                return lesson
        return None

    def _tracked(self, keys, code: bool) -> set[str]:
        return {
            i
            for i in keys
            if (self.lessons[i].track == Track.CODE_IMPLEMENTATION) == code
        }

    def formulate(self, request: CompletionRequest) -> str:
        case = self.case_in(request.prompt)
        if case is None:
            return "MODEL-STATUS: flawed\nThe problem is not understood."
        present = self.lessons_in(request.prompt)
        missing = self._tracked(case.needs, code=False) - present
        harmful = set(case.harmed_by) & present
        status = "flawed" if missing or harmful else "sound"
        return (
            f"MODEL-STATUS: {status}\n"
            f"Variables, objective and constraints of task {case.task.id}."
        )

    def _program(self, case: SyntheticCase, correct: bool) -> str:
        value = case.task.answer_value
        if not correct:
            value *= 1.25
        return program_text(case.task.id, value, broken=case.broken_first)

    def generate_program(self, request: CompletionRequest) -> str:
        case = self.case_in(request.prompt)
        if case is None:
            return _fence('print("no model")\n')
        present = self.lessons_in(request.prompt)
        code_ok = not self._tracked(case.needs, code=True) - present
        sound = "MODEL-STATUS: sound" in request.prompt
        return _fence(self._program(case, sound and code_ok))

    def self_debug(self, request: CompletionRequest) -> str:
        match = re.search(
            r"## Program\n```python\n(.*?)```", request.prompt, re.DOTALL
        )
        program = match.group(1) if match else ""
        fixed = [i for i in program.splitlines() if "# BUG" not in i]
        return _fence("\n".join(fixed) + "\n")

    def self_explore(self, request: CompletionRequest) -> str:
        case = self.case_in(request.prompt)
        if case is None:
            return _fence('print("no model")\n')
        found = "## Attempt" in request.prompt
        return _fence(
            program_text(
                case.task.id, case.task.answer_value * (1 if found else 1.25)
            )
        )

    def generate_insights(self, request: CompletionRequest) -> str:
        case = self.case_in(request.prompt)
        if case is None:
            return "[]"
        return json.dumps([self.lessons[i].to_item() for i in case.needs])

    def retrieve_label(self, request: CompletionRequest) -> str:
        case = self.case_in(request.prompt)
        if case is None:
            return "[]"
        text = case.task.description.lower()
        chosen = []
        for track, level1, level2 in LABEL_LINE.findall(request.prompt):
            for lesson in self.lessons.values():
                same = (
                    lesson.track.value == track
                    and label_key(lesson.level1) == label_key(level1)
                    and label_key(lesson.level2) == label_key(level2)
                )
                if same and any(i in text for i in lesson.label_terms()):
                    chosen.append(
                        {"track": track, "level1": level1, "level2": level2}
                    )
                    break
        return json.dumps(chosen)

    def retrieve_condition(self, request: CompletionRequest) -> str:
        case = self.case_in(request.prompt)
        description = case.task.description if case is not None else ""
        return json.dumps(
            [
                {
                    "id": int(insight_id),
                    "applicable": condition_holds(condition, description),
                    "rationale": "checked the quoted signals",
                }
                for insight_id, condition in CANDIDATE_LINE.findall(
                    request.prompt
                )
            ]
        )

    def diagnose_pos_neg(self, request: CompletionRequest) -> str:
        case = self.case_in(request.prompt)
        match = re.search(r"^Explanation: (.*)$", request.prompt, re.M)
        lesson = self.lesson_of(match.group(1)) if match else None
        role = "neutral"
        if case is not None and lesson is not None:
            if lesson.key in case.needs:
                role = "positive"
            elif lesson.key in case.harmed_by:
                role = "negative"
        return json.dumps({"role": role, "rationale": f"judged {role}"})

    def diagnose_issues(self, request: CompletionRequest) -> str:
        case = self.case_in(request.prompt)
        issues = [] if case is None else [
            self.lessons[i].issue for i in case.needs
        ]
        return json.dumps({"issues": issues})

    def diagnose_unretrieved(self, request: CompletionRequest) -> str:
        case = self.case_in(request.prompt)
        if case is None:
            return "[]"
        picks = []
        for insight_id, rest in CANDIDATE_LINE.findall(request.prompt):
            explanation = rest.split(" (applies when: ")[0]
            lesson = self.lesson_of(explanation)
            if lesson is not None and lesson.key in case.needs:
                picks.append({"id": int(insight_id), "issue": lesson.issue})
        return json.dumps(picks)

    def refine_conditions(self, request: CompletionRequest) -> str:
        match = re.search(r"^Explanation: (.*)$", request.prompt, re.M)
        lesson = self.lesson_of(match.group(1)) if match else None
        if lesson is None:
            return "[]"
        return json.dumps(lesson.refinements())

    def merge_insights(self, request: CompletionRequest) -> str:
        new = re.search(
            r"## New insight\nCondition: .*\nExplanation: (.*)\n",
            request.prompt,
        )
        if new is None:
            return json.dumps({"decision": "distinct"})
        for insight_id, condition, explanation, example in (
            INSIGHT_BLOCK.findall(request.prompt)
        ):
            if explanation.strip() == new.group(1).strip():
                return json.dumps(
                    {
                        "decision": "merge",
                        "target_id": int(insight_id),
                        "condition": condition.strip(),
                        "explanation": explanation.strip(),
                        "example": example.strip(),
                    }
                )
        return json.dumps({"decision": "distinct"})

    def classify_problem(self, request: CompletionRequest) -> str:
        case = self.case_in(request.prompt)
        kind = "UNKNOWN" if case is None else case.kind
        return json.dumps({"problem_type": kind})

    def provider(self) -> ScriptedProvider:
        """Return a scripted provider answering with this rule book."""
        return ScriptedProvider(
            {
                "formulate": self.formulate,
                "generate_program": self.generate_program,
                "self_debug": self.self_debug,
                "self_explore": self.self_explore,
                "generate_insights": self.generate_insights,
                "retrieve_label": self.retrieve_label,
                "retrieve_condition": self.retrieve_condition,
                "diagnose_issues": self.diagnose_issues,
                "diagnose_pos_neg": self.diagnose_pos_neg,
                "diagnose_unretrieved": self.diagnose_unretrieved,
                "refine_conditions": self.refine_conditions,
                "merge_insights": self.merge_insights,
                "classify_problem": self.classify_problem,
            }
        )


def synthetic_provider() -> ScriptedProvider:
    """The scripted provider of the bundled synthetic corpus."""
    return RuleBook().provider()
