from typing import Iterable, List, Optional, Sequence, Tuple

from src.models.cascade import CascadeCluster
from src.models.graph import SocialGraph
from src.schemas.schemas import NodeAttrs


def person(age: int = 30, gender: str = "female", country: str = "A") -> NodeAttrs:
    return NodeAttrs.person(age=age, gender=gender, country=country)


def people_graph(n: int, friend_edges: Iterable[Tuple[int, int]] = (), countries: Optional[Sequence[str]] = None,
                 ages: Optional[Sequence[int]] = None, genders: Optional[Sequence[str]] = None,
                 n_pages: int = 0, follow_edges: Iterable[Tuple[int, int]] = ()) -> SocialGraph:
    nodes = [person(age=ages[i] if ages else 30, gender=genders[i] if genders else "female",
                    country=countries[i] if countries else "A") for i in range(n)]
    nodes.extend(NodeAttrs.page() for _ in range(n_pages))
    return SocialGraph(nodes, friend_edges, follow_edges)


def star_graph(leaves: int) -> SocialGraph:
    return people_graph(leaves + 1, [(0, leaf) for leaf in range(1, leaves + 1)])


def cycle_graph(n: int) -> SocialGraph:
    return people_graph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n: int) -> SocialGraph:
    return people_graph(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n: int) -> SocialGraph:
    return people_graph(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def mixed_graph() -> SocialGraph:
    """Twelve people on a ring with chords and two pages followed by half of them each."""
    countries = ["A", "A", "B", "B", "C", "C", "A", "B", "C", "A", "B", "C"]
    genders = ["female", "male"] * 6
    ages = [20 + 3 * i for i in range(12)]
    friends = [(i, (i + 1) % 12) for i in range(12)] + [(0, 6), (3, 9)]
    follows = [(i, 12) for i in range(0, 12, 2)] + [(i, 13) for i in range(1, 12, 2)]
    return people_graph(12, friends, countries, ages, genders, n_pages=2, follow_edges=follows)


def cluster(cluster_id: str, events: List[Tuple[int, int, int, str]]) -> CascadeCluster:
    """Events as (actor, copy, day, kind) with kind "c" for a new copy and "r" for a reshare."""
    return CascadeCluster(cluster_id, [e[0] for e in events], [e[1] for e in events], [e[2] for e in events],
                          [e[3] == "c" for e in events])


def burst_events(days_counts: Sequence[Tuple[int, int]], n_actors: int, copy_id: int = 0,
                 creator: int = 0) -> List[Tuple[int, int, int, str]]:
    """One copy created by `creator` on the first listed day, then reshares cycling over the actors."""
    events = []
    actor = 0
    for day, count in days_counts:
        for _ in range(count):
            kind = "c" if not events else "r"
            events.append((creator if kind == "c" else actor % n_actors, copy_id, day, kind))
            actor += 1
    return events
