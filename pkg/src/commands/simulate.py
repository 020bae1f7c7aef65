import logging
from argparse import Namespace
from pathlib import Path

import pandas as pd

from src.commands.common import CommandResult, resolve_seed, sidecar
from src.repository.configs import read_config_data
from src.repository.events import write_events, write_peaks, write_series
from src.repository.graphs import read_graph
from src.repository.reports import write_table
from src.schemas.schemas import CorpusConfig, PeakParams, SimConfig
from src.services.burst import find_bursts
from src.services.errors import UsageError
from src.services.plots import plot_series
from src.services.simulate import connectivity_experiment, run_sim, simulate_corpus, suppression_experiment

logger = logging.getLogger(__name__)


def _sim_config(args: Namespace) -> tuple[SimConfig, PeakParams, dict]:
    """Simulation parameters at the top level of the config file, detector ones under [detector]."""
    if not args.config:
        raise UsageError(f"{args.command} needs --config")
    data = read_config_data(args.config)
    detector = PeakParams.model_validate(data.pop("detector", {}))
    extra = {key: data.pop(key) for key in ("pairs", "trials", "corpus") if key in data}
    resolve_seed(data, args.seed)
    return SimConfig.model_validate(data), detector, extra


def cmd_simulate(args: Namespace) -> CommandResult:
    """
    Runs one simulation and writes its event log, its daily series next to
    it (`<stem>.series.csv`), the detected bursts (`<stem>.peaks.csv`) and,
    with --plot, an SVG chart.
    """
    if not args.graph or not args.out:
        raise UsageError("simulate needs --graph and --out")
    config, detector, extra = _sim_config(args)
    if args.reps is not None or "corpus" in extra:
        corpus = dict(extra.get("corpus", {}))
        if args.reps is not None:
            corpus["reps"] = args.reps
        return _simulate_corpus(args, config, detector, CorpusConfig.model_validate(corpus))
    graph = read_graph(args.graph)
    result = run_sim(graph, config)
    series = result.series()
    bursts = find_bursts(series, detector)
    logger.info("simulated %d infections, %d bursts", result.total_infections, len(bursts))

    out = Path(args.out)
    outputs = [write_events([result.to_cluster(f"sim-{config.rng_seed}")], out),
               write_series(series, sidecar(out, ".series.csv")),
               write_peaks(bursts, sidecar(out, ".peaks.csv"))]
    if args.plot:
        outputs.append(plot_series(series, bursts, sidecar(out, ".svg"), title=f"seed {config.rng_seed}"))
    return CommandResult(outputs=outputs, seeds={"sim": config.rng_seed}, inputs=[Path(args.graph)])


def _simulate_corpus(args: Namespace, config: SimConfig, detector: PeakParams,
                     corpus: CorpusConfig) -> CommandResult:
    """All runs of a corpus go to one event log; `<stem>.runs.csv` lists their parameters and peak counts."""
    if args.plot:
        raise UsageError("--plot draws a single run, not a corpus")
    graph = read_graph(args.graph)
    tables = simulate_corpus(graph, config, corpus, detector)
    logger.info("corpus of %d cascades, %d recurring", len(tables.clusters), int(tables.runs["recurred"].sum()))
    out = Path(args.out)
    outputs = [write_events(tables.clusters, out), write_table(tables.runs, sidecar(out, ".runs.csv"))]
    return CommandResult(outputs=outputs, seeds={"sim": config.rng_seed}, inputs=[Path(args.graph)])


def cmd_experiment(args: Namespace) -> CommandResult:
    """
    Runs the suppression experiment (paired primary and reset runs) or the
    connectivity experiment (initial-burst removal against random removal)
    and writes one CSV row per pair or trial, plus a `<stem>.summary.csv`.
    """
    if not args.graph or not args.out:
        raise UsageError("experiment needs --graph and --out")
    config, detector, extra = _sim_config(args)
    graph = read_graph(args.graph)
    out = Path(args.out)

    if args.kind == "suppression":
        report = suppression_experiment(graph, config, detector, pairs=int(extra.get("pairs", 200)))
        table = pd.DataFrame({"pair": range(len(report.primary_peaks)), "primary_peaks": report.primary_peaks,
                              "alternate_peaks": report.alternate_peaks})
        summary = pd.DataFrame([{"t_statistic": report.test.statistic, "p_value": report.test.p_value,
                                 "effect_size_r": report.test.effect_size_r,
                                 "overlap_correlation": report.overlap_correlation.value,
                                 "overlap_degenerate": report.overlap_correlation.degenerate}])
    else:
        rows = []
        for trial in range(int(extra.get("trials", 50))):
            trial_config = config.model_copy(update={"rng_seed": config.rng_seed + trial})
            result = run_sim(graph, trial_config)
            rows.append({"trial": trial, **connectivity_experiment(graph, result, detector,
                                                                   rng_seed=trial_config.rng_seed)._asdict()})
        table = pd.DataFrame(rows, columns=["trial", "burst_removed", "random_removed", "baseline"])
        summary = pd.DataFrame([{
            "trials": len(table),
            "burst_below_random": float((table["burst_removed"] < table["random_removed"]).mean())
            if len(table) else 0.0,
            "mean_burst_removed": table["burst_removed"].mean(),
            "mean_random_removed": table["random_removed"].mean(),
            "baseline": table["baseline"].iloc[0] if len(table) else float("nan"),
        }])
    outputs = [write_table(table, out), write_table(summary, sidecar(out, ".summary.csv"))]
    return CommandResult(outputs=outputs, seeds={"sim": config.rng_seed}, inputs=[Path(args.graph)])
