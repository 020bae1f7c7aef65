from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from src.schemas.schemas import EventKind, ReshareEvent
from src.services.errors import InvalidInputError


NO_PARENT = -1


@dataclass(frozen=True)
class CopyInfo:
    creator: int
    created_day: int


class CascadeCluster:
    """
    All copies of one piece of content and every share of them, ordered by day.

    Events are held column-wise (actor, copy, day, create flag, parent) so that
    windows and counts stay vectorized; `events` rebuilds the event records on
    demand.

    Raises:
        InvalidInputError: If the cluster is empty, a copy lacks exactly one
            create event, or a copy is reshared before it was created.
    """

    def __init__(self, cluster_id: str, actors: Sequence[int], copy_ids: Sequence[int], days: Sequence[int],
                 is_create: Sequence[bool], parents: Optional[Sequence[int]] = None):
        self.cluster_id = str(cluster_id)
        actors = np.asarray(actors, dtype=np.int64)
        if actors.size == 0:
            raise InvalidInputError(f"cluster {self.cluster_id} has no events")
        copy_ids = np.asarray(copy_ids, dtype=np.int64)
        days = np.asarray(days, dtype=np.int64)
        is_create = np.asarray(is_create, dtype=bool)
        parents = np.full(actors.size, NO_PARENT, dtype=np.int64) if parents is None \
            else np.asarray(parents, dtype=np.int64)
        if not (copy_ids.size == days.size == is_create.size == parents.size == actors.size):
            raise InvalidInputError("event columns must have equal length")
        if days.min() < 1:
            raise InvalidInputError("event days are 1-based")

        order = np.argsort(days, kind="stable")
        self.actors = self._frozen(actors[order])
        self.copy_ids = self._frozen(copy_ids[order])
        self.days = self._frozen(days[order])
        self.is_create = self._frozen(is_create[order])
        self.parents = self._frozen(parents[order])
        self.copies: Dict[int, CopyInfo] = self._index_copies()

    @staticmethod
    def _frozen(values: np.ndarray) -> np.ndarray:
        values.flags.writeable = False
        return values

    def _index_copies(self) -> Dict[int, CopyInfo]:
        created, counts = np.unique(self.copy_ids[self.is_create], return_counts=True)
        if np.any(counts > 1):
            raise InvalidInputError(f"copy {created[counts > 1][0]} is created more than once")
        missing = np.setdiff1d(self.copy_ids, created)
        if missing.size:
            raise InvalidInputError(f"copy {missing[0]} has no create_copy event")

        creates = np.flatnonzero(self.is_create)
        created_days = np.empty(created.size, dtype=np.int64)
        created_days[np.searchsorted(created, self.copy_ids[creates])] = self.days[creates]
        early = self.days < created_days[np.searchsorted(created, self.copy_ids)]
        if np.any(early):
            raise InvalidInputError(f"copy {self.copy_ids[early][0]} is reshared before it was created")
        return {int(self.copy_ids[index]): CopyInfo(int(self.actors[index]), int(self.days[index]))
                for index in creates}

    @classmethod
    def from_events(cls, cluster_id: str, events: Iterable[ReshareEvent]) -> "CascadeCluster":
        events = list(events)
        return cls(cluster_id,
                   [event.actor for event in events],
                   [event.copy_id for event in events],
                   [event.day for event in events],
                   [event.kind == EventKind.CREATE_COPY for event in events],
                   [NO_PARENT if event.parent_actor is None else event.parent_actor for event in events])

    @cached_property
    def events(self) -> Tuple[ReshareEvent, ...]:
        return tuple(
            ReshareEvent(actor=int(actor), copy_id=int(copy_id), day=int(day),
                         kind=EventKind.CREATE_COPY if create else EventKind.RESHARE,
                         parent_actor=None if parent == NO_PARENT else int(parent))
            for actor, copy_id, day, create, parent
            in zip(self.actors, self.copy_ids, self.days, self.is_create, self.parents)
        )

    def __len__(self) -> int:
        return int(self.actors.size)

    @property
    def first_day(self) -> int:
        return int(self.days[0])

    @property
    def last_day(self) -> int:
        return int(self.days[-1])

    def window_mask(self, start_day: int, end_day: int) -> np.ndarray:
        return (self.days >= start_day) & (self.days <= end_day)

    def copy_order(self) -> list:
        """Copy ids in creation order (day, then position in the log)."""
        return [int(copy_id) for copy_id in self.copy_ids[self.is_create]]

    def __repr__(self) -> str:
        return f"CascadeCluster({self.cluster_id!r}, events={len(self)}, copies={len(self.copies)})"
