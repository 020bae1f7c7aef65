from functools import cached_property
from typing import Iterable, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from scipy import sparse

from src.schemas.schemas import Gender, NodeAttrs, NodeKind
from src.services.errors import InvalidInputError


Edge = Tuple[int, int]


def _frozen(values: np.ndarray) -> np.ndarray:
    values.flags.writeable = False
    return values


class SocialGraph:
    """
    People and pages joined by undirected friend edges (person to person) and
    directed follow edges (person to page).

    The graph is immutable after construction. Node ids are the dense range
    [0, node_count). The adjacency index treats both edge kinds as undirected,
    so degree(v) is friend-degree plus follow-degree, and for pages it is the
    follower count.

    Args:
        nodes (Sequence[NodeAttrs]): Attributes of every node, indexed by id.
        friend_edges (Iterable[Edge]): Person-person pairs, each listed once.
        follow_edges (Iterable[Edge]): (person, page) pairs.
        origin_ids (Optional[Sequence[int]]): Ids of the nodes in the graph this
            one was extracted from, when it is an induced subgraph.

    Raises:
        InvalidInputError: On self-loops, duplicate edges, unknown ids or edges
            whose endpoints have the wrong kind.
    """

    def __init__(self, nodes: Sequence[NodeAttrs], friend_edges: Iterable[Edge] = (),
                 follow_edges: Iterable[Edge] = (), origin_ids: Optional[Sequence[int]] = None):
        self.nodes: Tuple[NodeAttrs, ...] = tuple(nodes)
        n = len(self.nodes)
        self._is_page = _frozen(np.array([node.kind == NodeKind.PAGE for node in self.nodes], dtype=bool))

        self.friend_edges: Tuple[Edge, ...] = self._check_friend_edges(friend_edges, n)
        self.follow_edges: Tuple[Edge, ...] = self._check_follow_edges(follow_edges, n)

        if origin_ids is not None:
            origin_ids = np.asarray(origin_ids, dtype=np.int64)
            if origin_ids.shape != (n,):
                raise InvalidInputError("origin id mapping must cover every node")
            origin_ids = _frozen(origin_ids.copy())
        self.origin_ids: Optional[np.ndarray] = origin_ids

        pairs = np.array(self.friend_edges + self.follow_edges, dtype=np.int64).reshape(-1, 2)
        rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
        adjacency = sparse.csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(n, n))
        adjacency.sort_indices()
        self.indptr: np.ndarray = _frozen(adjacency.indptr.astype(np.int64))
        self.indices: np.ndarray = _frozen(adjacency.indices.astype(np.int64))
        self._degrees = _frozen(np.diff(self.indptr))

        friend_pairs = np.array(self.friend_edges, dtype=np.int64).reshape(-1, 2)
        self._friend_degrees = _frozen(np.bincount(friend_pairs.ravel(), minlength=n).astype(np.int64))

    def _check_friend_edges(self, edges: Iterable[Edge], n: int) -> Tuple[Edge, ...]:
        seen = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidInputError(f"friend edge ({u}, {v}) references an unknown node")
            if u == v:
                raise InvalidInputError(f"self-loop on node {u}")
            if self._is_page[u] or self._is_page[v]:
                raise InvalidInputError(f"friend edge ({u}, {v}) must join two persons")
            pair = (min(u, v), max(u, v))
            if pair in seen:
                raise InvalidInputError(f"duplicate friend edge {pair}")
            seen.add(pair)
        return tuple(sorted(seen))

    def _check_follow_edges(self, edges: Iterable[Edge], n: int) -> Tuple[Edge, ...]:
        seen = set()
        for person, page in edges:
            person, page = int(person), int(page)
            if not (0 <= person < n and 0 <= page < n):
                raise InvalidInputError(f"follow edge ({person}, {page}) references an unknown node")
            if self._is_page[person] or not self._is_page[page]:
                raise InvalidInputError(f"follow edge ({person}, {page}) must go from a person to a page")
            if (person, page) in seen:
                raise InvalidInputError(f"duplicate follow edge {(person, page)}")
            seen.add((person, page))
        return tuple(sorted(seen))

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.friend_edges) + len(self.follow_edges)

    @property
    def is_page(self) -> np.ndarray:
        return self._is_page

    @property
    def n_pages(self) -> int:
        return int(self._is_page.sum())

    @property
    def n_people(self) -> int:
        return self.node_count - self.n_pages

    def page_ids(self) -> np.ndarray:
        return np.flatnonzero(self._is_page)

    def degree(self, node: int) -> int:
        self.check_node(node)
        return int(self._degrees[node])

    def degrees(self) -> np.ndarray:
        return self._degrees

    def friend_degrees(self) -> np.ndarray:
        return self._friend_degrees

    def neighbors(self, node: int) -> np.ndarray:
        """All nodes joined to `node` by a friend or follow edge, in id order."""
        self.check_node(node)
        return self.indices[self.indptr[node]:self.indptr[node + 1]]

    def friends(self, node: int) -> np.ndarray:
        neighbors = self.neighbors(node)
        if self._is_page[node]:
            return neighbors[:0]
        return neighbors[~self._is_page[neighbors]]

    def followers(self, page: int) -> np.ndarray:
        neighbors = self.neighbors(page)
        if not self._is_page[page]:
            return neighbors[:0]
        return neighbors

    def followed_pages(self, person: int) -> np.ndarray:
        neighbors = self.neighbors(person)
        if self._is_page[person]:
            return neighbors[:0]
        return neighbors[self._is_page[neighbors]]

    def check_node(self, node: int) -> None:
        if not 0 <= int(node) < self.node_count:
            raise InvalidInputError(f"unknown node id {node}")

    def check_nodes(self, nodes: Iterable[int]) -> np.ndarray:
        ids = np.fromiter((int(node) for node in nodes), dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.node_count):
            bad = ids[(ids < 0) | (ids >= self.node_count)][0]
            raise InvalidInputError(f"unknown node id {bad}")
        return ids

    @cached_property
    def ages(self) -> np.ndarray:
        """Age per node, -1 for pages."""
        return _frozen(np.array([node.age if node.age is not None else -1 for node in self.nodes], dtype=np.int64))

    @cached_property
    def female(self) -> np.ndarray:
        return _frozen(np.array([node.gender == Gender.FEMALE for node in self.nodes], dtype=bool))

    @cached_property
    def countries(self) -> np.ndarray:
        """Country code per node, empty for pages."""
        return _frozen(np.array([node.country or "" for node in self.nodes], dtype=object))

    def adjacency_matrix(self) -> sparse.csr_matrix:
        data = np.ones(self.indices.size, dtype=float)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(self.node_count, self.node_count))

    def laplacian(self) -> sparse.csr_matrix:
        adjacency = self.adjacency_matrix()
        return (sparse.diags(self._degrees.astype(float)) - adjacency).tocsr()

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.node_count))
        graph.add_edges_from(self.friend_edges, kind="friend")
        graph.add_edges_from(self.follow_edges, kind="follow")
        return graph

    def __repr__(self) -> str:
        return (f"SocialGraph(people={self.n_people}, pages={self.n_pages}, "
                f"friend_edges={len(self.friend_edges)}, follow_edges={len(self.follow_edges)})")
