import logging
from pathlib import Path
from typing import Dict, List, Tuple

from pydantic import ValidationError

from src.models.graph import SocialGraph
from src.schemas.schemas import Gender, NodeAttrs, NodeKind
from src.services.errors import StorageError

logger = logging.getLogger(__name__)


def write_graph(graph: SocialGraph, path: str | Path) -> Path:
    """
    Writes the graph as text: a `nodes <n_people> <n_pages>` header, `P` lines
    for people, `G` lines for pages, then `F` friend and `L` follow edges.

    Args:
        graph (SocialGraph): The graph to store.
        path (str | Path): Target file.

    Returns:
        Path: The written file.
    """
    path = Path(path)
    lines = [f"nodes {graph.n_people} {graph.n_pages}"]
    for node_id, node in enumerate(graph.nodes):
        if not graph.is_page[node_id]:
            lines.append(f"P {node_id} {node.age} {node.gender.value} {node.country}")
    lines.extend(f"G {node_id}" for node_id in graph.page_ids())
    lines.extend(f"F {u} {v}" for u, v in graph.friend_edges)
    lines.extend(f"L {u} {p}" for u, p in graph.follow_edges)
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as err:
        raise StorageError(f"cannot write graph {path}: {err}")
    logger.info("wrote %r to %s", graph, path)
    return path


def _parse_int(token: str, path: Path, number: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise StorageError(f"{path}:{number}: expected an integer, got {token!r}")


def _add_node(nodes: Dict[int, NodeAttrs], node_id: int, node: NodeAttrs, path: Path, number: int) -> None:
    if node_id in nodes:
        raise StorageError(f"{path}:{number}: node {node_id} listed twice")
    nodes[node_id] = node


def read_graph(path: str | Path) -> SocialGraph:
    """
    Reads a graph written by `write_graph`.

    Raises:
        StorageError: If the file is missing, malformed, or its node ids do
            not match the header.
        InvalidInputError: If the edges break graph invariants.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise StorageError(f"cannot read graph {path}: {err}")

    header = None
    nodes: Dict[int, NodeAttrs] = {}
    friend_edges: List[Tuple[int, int]] = []
    follow_edges: List[Tuple[int, int]] = []
    for number, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields:
            continue
        tag, values = fields[0], fields[1:]
        if tag == "nodes" and len(values) == 2:
            header = tuple(_parse_int(value, path, number) for value in values)
        elif tag == "P" and len(values) == 4:
            try:
                node = NodeAttrs.person(age=_parse_int(values[1], path, number), gender=Gender(values[2]),
                                        country=values[3])
            except (ValueError, ValidationError) as err:
                raise StorageError(f"{path}:{number}: bad person record: {err}")
            _add_node(nodes, _parse_int(values[0], path, number), node, path, number)
        elif tag == "G" and len(values) == 1:
            _add_node(nodes, _parse_int(values[0], path, number), NodeAttrs.page(), path, number)
        elif tag in ("F", "L") and len(values) == 2:
            edge = (_parse_int(values[0], path, number), _parse_int(values[1], path, number))
            (friend_edges if tag == "F" else follow_edges).append(edge)
        else:
            raise StorageError(f"{path}:{number}: unrecognized line {line!r}")

    if header is None:
        raise StorageError(f"{path}: missing `nodes` header")
    n_people, n_pages = header
    if sorted(nodes) != list(range(n_people + n_pages)):
        raise StorageError(f"{path}: node ids must cover 0 .. {n_people + n_pages - 1} exactly once")
    if sum(node.kind == NodeKind.PAGE for node in nodes.values()) != n_pages:
        raise StorageError(f"{path}: header announces {n_pages} pages")
    return SocialGraph([nodes[i] for i in range(len(nodes))], friend_edges, follow_edges)
