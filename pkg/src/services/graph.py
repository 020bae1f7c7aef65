import logging
from typing import Iterable, List, Set

import networkx as nx
import numpy as np
from scipy.sparse import csgraph

from src.models.graph import SocialGraph
from src.schemas.schemas import Gender, GraphGenConfig, GraphModel, NodeAttrs
from src.services.errors import ConfigurationError, InvalidInputError
from config import settings

logger = logging.getLogger(__name__)

AGE_MEAN = 40.0
AGE_SD = 12.0
PROP_FEMALE = 0.55


def as_generator(rng_seed: int | np.random.Generator | np.random.SeedSequence) -> np.random.Generator:
    """
    Returns a numpy generator for a seed, a seed sequence or an existing generator.
    """
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return np.random.default_rng(rng_seed)


def _friend_graph(config: GraphGenConfig) -> nx.Graph:
    n = config.n_people
    if config.model == GraphModel.PREFERENTIAL_ATTACHMENT:
        if config.attachment >= n:
            raise ConfigurationError(f"attachment {config.attachment} must be below n_people {n}")
        return nx.barabasi_albert_graph(n, config.attachment, seed=config.rng_seed)
    if config.model == GraphModel.SMALL_WORLD:
        if config.neighbors >= n:
            raise ConfigurationError(f"neighbors {config.neighbors} must be below n_people {n}")
        return nx.watts_strogatz_graph(n, config.neighbors, config.rewiring_p, seed=config.rng_seed)
    return nx.fast_gnp_random_graph(n, config.edge_p, seed=config.rng_seed)


def _assign_countries(friends: nx.Graph, config: GraphGenConfig, rng: np.random.Generator) -> List[int]:
    """
    Walks every component breadth-first from its smallest node. The first node
    of a component draws a uniform country; every later node copies the country
    of a random already assigned neighbor with probability
    `country_assortativity`, and draws uniformly otherwise.
    """
    countries = [-1] * friends.number_of_nodes()
    for component in sorted(nx.connected_components(friends), key=min):
        source = min(component)
        countries[source] = int(rng.integers(config.n_countries))
        for _, child in nx.bfs_edges(friends, source):
            if rng.random() < config.country_assortativity:
                assigned = [nbr for nbr in friends.neighbors(child) if countries[nbr] >= 0]
                countries[child] = countries[assigned[int(rng.integers(len(assigned)))]]
            else:
                countries[child] = int(rng.integers(config.n_countries))
    return countries


def _follow_edges(friends: nx.Graph, config: GraphGenConfig, rng: np.random.Generator) -> List[tuple]:
    n = config.n_people
    weights = np.array([friends.degree(node) + 1 for node in range(n)], dtype=float)
    weights /= weights.sum()
    success = min(1.0, 1.0 / config.page_follow_mean)
    edges = []
    for j in range(config.n_pages):
        page = n + j
        size = min(int(rng.geometric(success)), n)
        for person in np.sort(rng.choice(n, size=size, replace=False, p=weights)):
            edges.append((int(person), page))
    return edges


def generate_synthetic(config: GraphGenConfig) -> SocialGraph:
    """
    Generates a synthetic social graph of people and pages.

    Friend edges come from the configured random graph model. People receive
    demographics (age from a clamped, rounded normal with mean 40 and sd 12,
    female with probability 0.55, countries with tunable assortativity). Pages
    draw a geometric follower count with the configured mean and attach
    preferentially to well-connected people.

    Args:
        config (GraphGenConfig): Generator parameters.

    Returns:
        SocialGraph: People occupy ids [0, n_people), pages follow them.

    Raises:
        ConfigurationError: If model parameters do not fit the population size.
    """
    friends = _friend_graph(config)
    demographics_seq, countries_seq, pages_seq = np.random.SeedSequence(config.rng_seed).spawn(3)
    rng = np.random.default_rng(demographics_seq)

    ages = np.clip(np.rint(rng.normal(AGE_MEAN, AGE_SD, config.n_people)), 13, 100).astype(int)
    female = rng.random(config.n_people) < PROP_FEMALE
    countries = _assign_countries(friends, config, np.random.default_rng(countries_seq))

    nodes = [NodeAttrs.person(age=int(ages[i]), gender=Gender.FEMALE if female[i] else Gender.MALE,
                              country=f"C{countries[i]:02d}")
             for i in range(config.n_people)]
    nodes.extend(NodeAttrs.page() for _ in range(config.n_pages))

    follow_edges = _follow_edges(friends, config, np.random.default_rng(pages_seq))
    graph = SocialGraph(nodes, friends.edges(), follow_edges)
    logger.info("generated %s graph: %r", config.model.value, graph)
    return graph


def degree_proportional_sample(graph: SocialGraph, k: int,
                               rng_seed: int | np.random.Generator) -> List[int]:
    """
    Samples `k` node ids with replacement, with P(v) = degree(v) / sum of degrees.

    Raises:
        InvalidInputError: If the graph is empty, k is negative or every node
            is isolated.
    """
    if graph.node_count == 0:
        raise InvalidInputError("cannot sample from an empty graph")
    if k < 0:
        raise InvalidInputError("sample size must be non-negative")
    degrees = graph.degrees().astype(float)
    total = degrees.sum()
    if total == 0:
        raise InvalidInputError("every node is isolated, total degree is zero")
    if k == 0:
        return []
    rng = as_generator(rng_seed)
    return [int(node) for node in rng.choice(graph.node_count, size=k, replace=True, p=degrees / total)]


def induced_subgraph(graph: SocialGraph, nodes: Iterable[int]) -> SocialGraph:
    """
    Extracts the subgraph on `nodes` with every friend and follow edge whose
    endpoints both belong to it.

    Nodes are re-indexed in increasing original id order; `origin_ids` of the
    result maps each new id back to its id in `graph`.

    Raises:
        InvalidInputError: If a node id is unknown.
    """
    ids = np.unique(graph.check_nodes(nodes))
    remap = np.full(graph.node_count, -1, dtype=np.int64)
    remap[ids] = np.arange(ids.size)

    def keep(edges):
        pairs = remap[np.array(edges, dtype=np.int64).reshape(-1, 2)]
        return pairs[(pairs >= 0).all(axis=1)].tolist()

    return SocialGraph([graph.nodes[i] for i in ids], keep(graph.friend_edges), keep(graph.follow_edges),
                       origin_ids=ids)


def remove_nodes(graph: SocialGraph, nodes: Iterable[int]) -> SocialGraph:
    removed = np.zeros(graph.node_count, dtype=bool)
    removed[graph.check_nodes(nodes)] = True
    return induced_subgraph(graph, np.flatnonzero(~removed))


def exposed_population(graph: SocialGraph, sharers: Iterable[int]) -> Set[int]:
    """
    People and pages that could have seen a share: friends of person sharers
    and followers of page sharers, excluding the sharers themselves.
    """
    ids = np.unique(graph.check_nodes(sharers))
    if ids.size == 0:
        return set()
    reached = [graph.followers(node) if graph.is_page[node] else graph.friends(node) for node in ids]
    exposed = np.setdiff1d(np.concatenate(reached), ids)
    return set(exposed.tolist())


def largest_component(graph: SocialGraph) -> Set[int]:
    if graph.node_count == 0:
        return set()
    _, labels = csgraph.connected_components(graph.adjacency_matrix(), directed=False)
    biggest = np.argmax(np.bincount(labels))
    return set(np.flatnonzero(labels == biggest).tolist())


def is_connected(graph: SocialGraph) -> bool:
    if graph.node_count == 0:
        return False
    n_components, _ = csgraph.connected_components(graph.adjacency_matrix(), directed=False)
    return n_components == 1


def algebraic_connectivity(graph: SocialGraph, tolerance: float = settings.EIGEN_TOLERANCE,
                           largest_only: bool = False) -> float:
    """
    Returns the Fiedler value, the second smallest eigenvalue of the
    combinatorial Laplacian, with both edge kinds taken as undirected.

    Disconnected graphs have a Fiedler value of 0. With `largest_only` the value
    is taken on the largest connected component instead. Graphs up to
    `settings.DENSE_EIGEN_LIMIT` nodes use a dense symmetric eigensolver,
    larger ones the iterative TraceMIN solver of networkx.

    Args:
        graph (SocialGraph): The graph.
        tolerance (float): Solver tolerance for the iterative path.
        largest_only (bool): Restrict to the largest component.

    Returns:
        float: The Fiedler value.

    Raises:
        InvalidInputError: If the graph has fewer than 2 nodes or the
            tolerance is not positive.
    """
    if tolerance <= 0:
        raise InvalidInputError("tolerance must be positive")
    if graph.node_count < 2:
        raise InvalidInputError("algebraic connectivity needs at least 2 nodes")
    if largest_only:
        graph = induced_subgraph(graph, largest_component(graph))
        if graph.node_count < 2:
            return 0.0
    if not is_connected(graph):
        return 0.0
    if graph.node_count <= settings.DENSE_EIGEN_LIMIT:
        eigenvalues = np.linalg.eigvalsh(graph.laplacian().toarray())
        return float(max(eigenvalues[1], 0.0))
    return float(nx.algebraic_connectivity(graph.to_networkx(), tol=tolerance, method="tracemin_pcg", seed=0))


def epidemic_threshold(graph: SocialGraph) -> float:
    """Estimates the percolation threshold of a contagion as <k> / <k^2>."""
    degrees = graph.degrees().astype(float)
    second_moment = float(np.mean(degrees ** 2)) if degrees.size else 0.0
    if second_moment == 0:
        raise InvalidInputError("epidemic threshold is undefined on a graph without edges")
    return float(np.mean(degrees)) / second_moment
