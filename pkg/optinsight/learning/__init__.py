"""For importing the library learning phase."""
from .exploration import ExplorationState, ExplorationStep, self_explore
from .extraction import extract_insights
from .ordering import classify_problem, cluster_and_order, jaccard
from .stopping import MaxIterations, Plateau, SoftExit, StopCondition
from .training import (
    BatchReport,
    IterationReport,
    Learner,
    LearningConfig,
    TrainReport,
    train,
)
from .trials import TrialBundle, run_trials
from .verification import audit_library, local_verify, verify_on_tasks

__all__ = [
    "BatchReport",
    "ExplorationState",
    "ExplorationStep",
    "IterationReport",
    "Learner",
    "LearningConfig",
    "MaxIterations",
    "Plateau",
    "SoftExit",
    "StopCondition",
    "TrainReport",
    "TrialBundle",
    "audit_library",
    "classify_problem",
    "cluster_and_order",
    "extract_insights",
    "jaccard",
    "local_verify",
    "run_trials",
    "self_explore",
    "train",
    "verify_on_tasks",
]
