"""Definition of the three-track label taxonomy.

Insights are indexed by a path ``track / level-1 label / level-2 label``.
Every label carries a natural-language condition that states when the
category should be retrieved.
"""
from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any


class Track(str, Enum):
    """The three main tracks of the taxonomy."""

    DOMAIN_MODELING = "DomainModeling"
    GENERAL_FORMULATION = "GeneralFormulation"
    CODE_IMPLEMENTATION = "CodeImplementation"

    @classmethod
    def parse(cls, value: str | Track) -> Track:
        """Accept the enum value, the member name or a spaced title."""
        if isinstance(value, Track):
            return value
        key = "".join(str(value).split()).casefold()
        for track in cls:
            if key in (track.value.casefold(), track.name.casefold()):
                return track
            if key == track.name.replace("_", "").casefold():
                return track
        raise ValueError(f"Unknown taxonomy track '{value}'")


class LabelLevel(str, Enum):
    """The two label levels below a track."""

    L1 = "L1"
    L2 = "L2"


def label_key(name: str) -> str:
    """Key used for the case-insensitive exact name match."""
    return " ".join(name.split()).casefold()


@dataclass(frozen=True)
class TaxonomyPath:
    """The location of an insight in the taxonomy."""

    track: Track
    level1: str
    level2: str

    def __post_init__(self):
        object.__setattr__(self, "track", Track.parse(self.track))

    def key(self) -> tuple[str, str, str]:
        """Return the case-insensitive identity of the path."""
        return (
            self.track.value,
            label_key(self.level1),
            label_key(self.level2),
        )

    def is_complete(self) -> bool:
        """Check that both label names are non-empty."""
        return bool(self.level1.strip()) and bool(self.level2.strip())

    def to_dict(self) -> dict[str, str]:
        return {
            "track": self.track.value,
            "level1": self.level1,
            "level2": self.level2,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TaxonomyPath:
        return cls(
            track=Track.parse(data["track"]),
            level1=str(data["level1"]),
            level2=str(data["level2"]),
        )

    def __str__(self) -> str:
        return f"{self.track.value} / {self.level1} / {self.level2}"


@dataclass(frozen=True)
class LabelNode:
    """A single label in the taxonomy."""

    name: str
    level: LabelLevel
    condition: str  # When the category should be retrieved.
    track: Track
    parent: str | None = None  # The level-1 name for level-2 labels.
    children: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class Taxonomy:
    """An immutable tree of labels across the three tracks.

    Level-1 labels are unique within a track and level-2 labels are
    unique within their level-1 parent. The same level-2 name may
    appear under several level-1 labels. Two taxonomies are equal when
    their nested forms are equal.
    """

    nodes: tuple[LabelNode, ...] = field(default_factory=tuple)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Taxonomy):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash(repr(self.to_dict()))

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self) -> Iterator[LabelNode]:
        return iter(self.nodes)

    def level1(self, track: Track | str, name: str) -> LabelNode | None:
        """Return the level-1 label with the given name, if any."""
        track = Track.parse(track)
        key = label_key(name)
        for node in self.nodes:
            if (
                node.level == LabelLevel.L1
                and node.track == track
                and label_key(node.name) == key
            ):
                return node
        return None

    def level2(
        self, track: Track | str, level1: str, name: str
    ) -> LabelNode | None:
        """Return the level-2 label under a level-1 label, if any."""
        parent = self.level1(track, level1)
        if parent is None:
            return None
        key = label_key(name)
        for node in self.nodes:
            if (
                node.level == LabelLevel.L2
                and node.track == parent.track
                and node.parent == parent.name
                and label_key(node.name) == key
            ):
                return node
        return None

    def resolve(self, path: TaxonomyPath) -> TaxonomyPath | None:
        """Return the path spelled as stored, or None if it dangles."""
        node = self.level2(path.track, path.level1, path.level2)
        if node is None or node.parent is None:
            return None
        return TaxonomyPath(path.track, node.parent, node.name)

    def __contains__(self, path: object) -> bool:
        if not isinstance(path, TaxonomyPath):
            return False
        return self.resolve(path) is not None

    def level2_paths(self) -> list[TaxonomyPath]:
        """List every level-2 label as a path, in insertion order."""
        return [
            TaxonomyPath(node.track, node.parent, node.name)
            for node in self.nodes
            if node.level == LabelLevel.L2 and node.parent is not None
        ]

    def with_label(
        self,
        track: Track | str,
        level1: str,
        level2: str | None,
        condition: str,
    ) -> Taxonomy:
        """Return a new taxonomy with one more label.

        With ``level2`` set to None a level-1 label is added, otherwise
        a level-2 label is added under an existing level-1 label.
        """
        track = Track.parse(track)
        if not condition.strip():
            raise ValueError("A label needs a non-empty condition")
        if level2 is None:
            if not level1.strip():
                raise ValueError("A label needs a non-empty name")
            if self.level1(track, level1) is not None:
                raise ValueError(f"Label '{level1}' already exists")
            node = LabelNode(
                name=level1.strip(),
                level=LabelLevel.L1,
                condition=condition.strip(),
                track=track,
            )
            return Taxonomy(nodes=self.nodes + (node,))
        parent = self.level1(track, level1)
        if parent is None:
            raise ValueError(f"Missing level-1 label '{level1}' in {track}")
        if not level2.strip():
            raise ValueError("A label needs a non-empty name")
        if self.level2(track, level1, level2) is not None:
            raise ValueError(f"Label '{level2}' already exists")
        node = LabelNode(
            name=level2.strip(),
            level=LabelLevel.L2,
            condition=condition.strip(),
            track=track,
            parent=parent.name,
        )
        nodes = tuple(
            (
                replace(i, children=i.children + (node.name,))
                if i is parent
                else i
            )
            for i in self.nodes
        )
        return Taxonomy(nodes=nodes + (node,))

    def to_dict(self) -> dict[str, Any]:
        """Return the nested form used in persisted files."""
        tracks = []
        for track in Track:
            labels = []
            for node in self.nodes:
                if node.level != LabelLevel.L1 or node.track != track:
                    continue
                children = [
                    {"name": child.name, "condition": child.condition}
                    for child in self.nodes
                    if child.level == LabelLevel.L2
                    and child.track == track
                    and child.parent == node.name
                ]
                labels.append(
                    {
                        "name": node.name,
                        "condition": node.condition,
                        "children": children,
                    }
                )
            tracks.append({"track": track.value, "labels": labels})
        return {"tracks": tracks}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Taxonomy:
        """Build a taxonomy from its nested form."""
        taxonomy = cls()
        for track_data in data.get("tracks", []):
            track = Track.parse(track_data["track"])
            for label in track_data.get("labels", []):
                taxonomy = taxonomy.with_label(
                    track, label["name"], None, label["condition"]
                )
                for child in label.get("children", []):
                    taxonomy = taxonomy.with_label(
                        track, label["name"], child["name"], child["condition"]
                    )
        return taxonomy
