from argparse import Namespace
from pathlib import Path

from src.commands.common import CommandResult, resolve_seed, sidecar
from src.repository.configs import read_config_data
from src.repository.graphs import read_graph
from src.repository.reports import write_table
from src.schemas.schemas import SweepConfig, SweepKind
from src.services.errors import UsageError
from src.services.simulate import copy_count_sweep, threshold_grid, virality_sweep


def cmd_sweep(args: Namespace) -> CommandResult:
    """
    Runs a virality or copy-count sweep. Raw per-run rows go to --out, the
    per-grid-point means and standard errors to `<stem>.summary.csv`.
    """
    if not args.graph or not args.config or not args.out:
        raise UsageError("sweep needs --graph, --config and --out")
    data = read_config_data(args.config)
    seed = resolve_seed(data.setdefault("base", {}), args.seed)
    config = SweepConfig.model_validate(data)
    graph = read_graph(args.graph)

    if config.kind == SweepKind.COPIES:
        tables = copy_count_sweep(graph, config.base, [int(m) for m in config.grid], config.reps, config.detector)
    else:
        grid = threshold_grid(graph, config.grid) if config.grid_mode == "threshold" else config.grid
        tables = virality_sweep(graph, config.base, grid, config.reps, config.detector, p1_ratio=config.p1_ratio)

    out = Path(args.out)
    outputs = [write_table(tables.raw, out), write_table(tables.summary, sidecar(out, ".summary.csv"))]
    return CommandResult(outputs=outputs, seeds={"sweep": seed}, inputs=[Path(args.graph)])
