from argparse import Namespace
from pathlib import Path

from src.commands.common import CommandResult, resolve_seed
from src.repository.configs import read_config_data
from src.repository.graphs import write_graph
from src.schemas.schemas import GraphGenConfig
from src.services.errors import UsageError
from src.services.graph import generate_synthetic


def cmd_graph_gen(args: Namespace) -> CommandResult:
    """
    Generates a synthetic graph from a GraphGenConfig file and writes it in
    the text graph format.

    Raises:
        UsageError: If --config or --out is missing.
    """
    if not args.config or not args.out:
        raise UsageError("graph-gen needs --config and --out")
    data = read_config_data(args.config)
    seed = resolve_seed(data, args.seed)
    graph = generate_synthetic(GraphGenConfig.model_validate(data))
    out = write_graph(graph, Path(args.out))
    return CommandResult(outputs=[out], seeds={"graph": seed})
