"""Immutable views of the library at a commit point."""
from __future__ import annotations

import hashlib
import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any

from optinsight.insights.insight import Insight, PerformanceProfile
from optinsight.insights.taxonomy import Taxonomy, TaxonomyPath, Track


@dataclass(frozen=True, eq=False)
class LibrarySnapshot:
    """The taxonomy, the insights and their profiles at one version.

    Snapshots are never modified; applying a commit creates a new
    snapshot with the version increased by one.
    """

    version: int = 0
    taxonomy: Taxonomy = field(default_factory=Taxonomy)
    insights: Mapping[int, Insight] = field(default_factory=dict)
    profiles: Mapping[int, PerformanceProfile] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self,
            "insights",
            MappingProxyType(dict(sorted(self.insights.items()))),
        )
        object.__setattr__(
            self,
            "profiles",
            MappingProxyType(dict(sorted(self.profiles.items()))),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LibrarySnapshot):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash(self.checksum())

    @property
    def next_insight_id(self) -> int:
        """The id the next added insight gets; ids are never reused."""
        return max(self.insights, default=0) + 1

    def active_insights(self) -> list[Insight]:
        """Return the Active insights ordered by id."""
        return [i for i in self.insights.values() if i.is_active]

    def insights_under(self, path: TaxonomyPath) -> list[Insight]:
        """Return the Active insights stored under a level-2 label."""
        key = path.key()
        return [i for i in self.active_insights() if i.taxonomy.key() == key]

    def insights_in_track(self, track: Track) -> list[Insight]:
        return [i for i in self.active_insights() if i.track == track]

    def populated_paths(self) -> list[TaxonomyPath]:
        """Return the level-2 labels holding at least one Active insight."""
        keys = {i.taxonomy.key() for i in self.active_insights()}
        return [i for i in self.taxonomy.level2_paths() if i.key() in keys]

    def profile(self, insight_id: int) -> PerformanceProfile:
        """Return the profile of an insight (empty if none recorded)."""
        return self.profiles.get(insight_id, PerformanceProfile(insight_id))

    def with_insight(self, insight: Insight) -> LibrarySnapshot:
        """Return an unversioned copy with one insight replaced.

        This is used for replay experiments (condition substitution)
        and never enters the commit history.
        """
        insights = dict(self.insights)
        insights[insight.id] = insight
        return LibrarySnapshot(
            version=self.version,
            taxonomy=self.taxonomy,
            insights=insights,
            profiles=self.profiles,
        )

    def without_insights(self, insight_ids: Iterable[int]) -> LibrarySnapshot:
        """Return an unversioned copy without some insights."""
        drop = set(insight_ids)
        return LibrarySnapshot(
            version=self.version,
            taxonomy=self.taxonomy,
            insights={k: v for k, v in self.insights.items() if k not in drop},
            profiles={k: v for k, v in self.profiles.items() if k not in drop},
        )

    def to_dict(self) -> dict[str, Any]:
        """Return the canonical nested form of the snapshot."""
        return {
            "version": self.version,
            "taxonomy": self.taxonomy.to_dict(),
            "insights": [i.to_dict() for i in self.insights.values()],
            "profiles": [i.to_dict() for i in self.profiles.values()],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> LibrarySnapshot:
        insights = (Insight.from_dict(i) for i in data.get("insights", ()))
        profiles = (
            PerformanceProfile.from_dict(i) for i in data.get("profiles", ())
        )
        return cls(
            version=int(data.get("version", 0)),
            taxonomy=Taxonomy.from_dict(data.get("taxonomy", {})),
            insights={i.id: i for i in insights},
            profiles={i.insight_id: i for i in profiles},
        )

    def checksum(self) -> str:
        """Return a SHA-256 over the canonical JSON form."""
        return hashlib.sha256(canonical_json(self.to_dict())).hexdigest()


def canonical_json(data: Any) -> bytes:
    """Serialize to the byte-reproducible JSON form."""
    return json.dumps(
        data, sort_keys=True, indent=1, ensure_ascii=False
    ).encode("utf-8")


def complexity(snapshot: LibrarySnapshot) -> int:
    """Return the library complexity: the count of Active insights."""
    return len(snapshot.active_insights())
