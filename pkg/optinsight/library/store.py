"""The library store: a single-writer commit queue over snapshots.

Any number of workers may read the latest snapshot or enqueue
commits. Commits are applied one at a time by a single writer thread
in the order they arrive, and every applied commit produces a new
immutable snapshot.
"""
from __future__ import annotations

import logging
import threading
from collections.abc import Sequence
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass

from optinsight.exceptions import CommitRejected, QueueClosed
from optinsight.insights.taxonomy import TaxonomyPath, Track
from optinsight.library.commits import AddLabel, Commit, Origin, apply_commit
from optinsight.library.snapshot import LibrarySnapshot

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())


@dataclass(frozen=True)
class TicketResult:
    """What happened to an enqueued commit."""

    version: int | None  # Snapshot version the commit produced.
    insight_id: int | None
    rejected: str | None = None

    @property
    def applied(self) -> bool:
        return self.rejected is None


@dataclass(frozen=True)
class AppliedCommit:
    """An entry of the commit log."""

    version: int
    commit: Commit
    insight_id: int | None


class Ticket:
    """A handle on an enqueued commit."""

    def __init__(self, future: Future):
        self._future = future

    def done(self) -> bool:
        return self._future.done()

    def result(self, timeout: float | None = None) -> TicketResult:
        """Wait for the commit to be applied or rejected."""
        return self._future.result(timeout=timeout)


class LibraryStore:
    """Owns the current snapshot and the commit queue."""

    def __init__(self, snapshot: LibrarySnapshot | None = None):
        if snapshot is None:
            snapshot = LibrarySnapshot()
        self._snapshot = snapshot
        self._writer = ThreadPoolExecutor(
            max_workers=1, thread_name_prefix="library-writer"
        )
        self._lock = threading.Lock()
        self._closed = False
        self.log: list[AppliedCommit] = []
        self.rejections: list[tuple[Commit, str]] = []

    @property
    def snapshot(self) -> LibrarySnapshot:
        """The latest snapshot."""
        return self._snapshot

    @property
    def closed(self) -> bool:
        return self._closed

    def enqueue(self, commit: Commit) -> Ticket:
        """Queue a commit for application.

        Raises:
            QueueClosed: If the store has been closed.
        """
        return self.enqueue_batch([commit])[0]

    def enqueue_batch(self, commits: Sequence[Commit]) -> list[Ticket]:
        """Queue several commits that are applied back to back."""
        futures: list[Future] = [Future() for _ in commits]
        with self._lock:
            if self._closed:
                raise QueueClosed("The library no longer accepts commits")
            self._writer.submit(self._apply_all, list(commits), futures)
        return [Ticket(i) for i in futures]

    def commit(self, commit: Commit) -> TicketResult:
        """Queue a commit and wait for the result."""
        return self.enqueue(commit).result()

    def _apply_all(self, commits: list[Commit], futures: list[Future]):
        for commit, future in zip(commits, futures):
            try:
                snapshot, insight_id = apply_commit(self._snapshot, commit)
            except CommitRejected as error:
                LOGGER.info(
                    "Rejected %s commit: %s", commit.kind.value, error.reason
                )
                self.rejections.append((commit, error.reason))
                future.set_result(TicketResult(None, None, error.reason))
                continue
            except Exception as error:  # pragma: no cover
                future.set_exception(error)
                continue
            self._snapshot = snapshot
            self.log.append(
                AppliedCommit(snapshot.version, commit, insight_id)
            )
            LOGGER.debug(
                "Applied %s at version %d", commit.kind.value, snapshot.version
            )
            future.set_result(TicketResult(snapshot.version, insight_id))

    def ensure_label(
        self,
        track: Track | str,
        level1: str,
        level2: str,
        proposed_conditions: tuple[str, str],
        origin: Origin | None = None,
    ) -> TaxonomyPath:
        """Return the path for a label pair, creating missing labels.

        Names match case-insensitively and exactly. Missing labels are
        created with the proposed (level-1, level-2) conditions in one
        batch of AddLabel commits.

        Raises:
            CommitRejected: If a missing label could not be created.
        """
        track = Track.parse(track)
        if not level1.strip() or not level2.strip():
            raise ValueError("Label names must be non-empty")
        path = TaxonomyPath(track, level1, level2)
        taxonomy = self._snapshot.taxonomy
        resolved = taxonomy.resolve(path)
        if resolved is not None:
            return resolved
        origin = origin if origin is not None else Origin()
        commits = []
        if taxonomy.level1(track, level1) is None:
            commits.append(
                Commit(
                    AddLabel(track, level1, None, proposed_conditions[0]),
                    origin,
                )
            )
        commits.append(
            Commit(
                AddLabel(track, level1, level2, proposed_conditions[1]),
                origin,
            )
        )
        results = [i.result() for i in self.enqueue_batch(commits)]
        resolved = self._snapshot.taxonomy.resolve(path)
        if resolved is None:
            reasons = [i.rejected for i in results if i.rejected]
            raise CommitRejected(
                reasons[0] if reasons else "unresolved taxonomy path"
            )
        LOGGER.info("Added label %s", resolved)
        return resolved

    def close(self):
        """Stop accepting commits and wait for the queue to drain."""
        with self._lock:
            self._closed = True
        self._writer.shutdown(wait=True)

    def __enter__(self) -> LibraryStore:
        return self

    def __exit__(self, *exc):
        self.close()
