"""For importing the library evolution."""
from .diagnosis import (
    DiagnosisRecord,
    Evidence,
    diagnose,
    find_unretrieved,
    judge_role,
)
from .evolver import (
    EvolutionConfig,
    EvolutionReport,
    Evolver,
    RefinementEntry,
    evolve,
)
from .refinement import (
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

__all__ = [
    "DiagnosisRecord",
    "Evidence",
    "diagnose",
    "find_unretrieved",
    "judge_role",
    "EvolutionConfig",
    "EvolutionReport",
    "Evolver",
    "RefinementEntry",
    "evolve",
    "RefinementCandidate",
    "ReplayCounts",
    "ReplayVerdict",
    "RetrievalReplay",
    "SolverReplay",
    "Strategy",
    "baseline_score",
    "propose_conditions",
    "refine_insight",
    "score_condition",
]
