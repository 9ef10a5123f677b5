"""For importing the library store."""
from .commits import (
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
from .merging import MergeDecision, MergeKind, merge_check
from .persistence import (
    load_library,
    load_taxonomy,
    save_library,
    seeded_snapshot,
)
from .snapshot import LibrarySnapshot, complexity
from .store import LibraryStore, Ticket, TicketResult

__all__ = [
    "AddInsight",
    "AddLabel",
    "Commit",
    "CommitKind",
    "LibrarySnapshot",
    "LibraryStore",
    "MergeDecision",
    "MergeInsights",
    "MergeKind",
    "Origin",
    "RefineCondition",
    "RetireInsight",
    "Ticket",
    "TicketResult",
    "UpdateProfile",
    "apply_commit",
    "complexity",
    "load_library",
    "load_taxonomy",
    "merge_check",
    "save_library",
    "seeded_snapshot",
]
