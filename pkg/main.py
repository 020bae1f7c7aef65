import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from src.commands.analyze import cmd_analyze
from src.commands.common import record_run
from src.commands.detect import cmd_detect
from src.commands.graph_gen import cmd_graph_gen
from src.commands.predict import TASKS, cmd_predict
from src.commands.replay import cmd_replay
from src.commands.simulate import cmd_experiment, cmd_simulate
from src.commands.sweep import cmd_sweep
from src.services.errors import CascadeError, ExitCode, UsageError
from config import VERSION, settings

logger = logging.getLogger("cascades")

COMMANDS = {
    "graph-gen": (cmd_graph_gen, "graph.txt"),
    "simulate": (cmd_simulate, "events.jsonl"),
    "experiment": (cmd_experiment, "experiment.csv"),
    "sweep": (cmd_sweep, "sweep.csv"),
    "detect": (cmd_detect, "peaks.csv"),
    "analyze": (cmd_analyze, "metrics.csv"),
    "predict": (cmd_predict, "report.csv"),
}


class ArgumentParser(argparse.ArgumentParser):
    """Reports bad arguments as a UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="overrides every rng_seed of the config")
    common.add_argument("--config", help="TOML or JSON experiment config")
    common.add_argument("--out", help=f"output file, defaults to a file under {settings.OUTPUT_DIR}/")
    common.add_argument("--threads", type=int, help="worker processes for sweeps, datasets and folds")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")

    parser = ArgumentParser(prog="cascades", description="Simulate and analyze recurring information cascades.")
    parser.add_argument("--version", action="version", version=VERSION)
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("graph-gen", parents=[common], help="generate a synthetic social graph")

    simulate = commands.add_parser("simulate", parents=[common], help="run the multi-copy SIR model once")
    simulate.add_argument("--graph", required=True)
    simulate.add_argument("--plot", action="store_true", help="also write an SVG chart of the series")
    simulate.add_argument("--reps", type=int, help="simulate a corpus of seeded runs into one event log")

    experiment = commands.add_parser("experiment", parents=[common],
                                     help="burst suppression or connectivity experiment")
    experiment.add_argument("--graph", required=True)
    experiment.add_argument("--kind", choices=["suppression", "connectivity"], default="suppression")

    sweep = commands.add_parser("sweep", parents=[common], help="virality or copy-count sweep")
    sweep.add_argument("--graph", required=True)

    detect = commands.add_parser("detect", parents=[common], help="detect peaks and bursts")
    detect.add_argument("--input", required=True, help="series CSV or event log JSONL")
    detect.add_argument("--horizon", type=int)
    detect.add_argument("--plot", action="store_true")

    analyze = commands.add_parser("analyze", parents=[common], help="characterize every cascade of an event log")
    analyze.add_argument("--events", required=True)
    analyze.add_argument("--graph", required=True)
    analyze.add_argument("--horizon", type=int)

    predict = commands.add_parser("predict", parents=[common], help="train and cross-validate recurrence models")
    predict.add_argument("--events", required=True)
    predict.add_argument("--graph", required=True)
    predict.add_argument("--task", choices=TASKS)
    predict.add_argument("--horizon", type=int)
    predict.add_argument("--ablation", action="store_true", help="also score feature groups")

    replay = commands.add_parser("replay", parents=[common], help="re-run the command recorded in a manifest")
    replay.add_argument("manifest")
    return parser


def configure_logging(level: Optional[str]) -> None:
    level = (level or settings.LOG_LEVEL).upper()
    if level not in logging.getLevelNamesMapping():
        raise UsageError(f"unknown log level {level}")
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Runs one subcommand and returns its exit code: 0 on success, 2 for usage
    errors, 3 for invalid input or configuration, 4 for file errors.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level)
        if args.threads:
            settings.THREADS = args.threads
        if args.command == "replay":
            return cmd_replay(args, main)

        command, default_out = COMMANDS[args.command]
        if not args.out:
            args.out = str(Path(settings.OUTPUT_DIR) / default_out)
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        result = command(args)
        record_run(args.command, argv, args.config, result)
    except CascadeError as err:
        logger.error(err.detail)
        return int(err.exit_code)
    except ValidationError as err:
        logger.error("invalid configuration: %s", err)
        return int(ExitCode.VALIDATION)
    except OSError as err:
        logger.error("file error: %s", err)
        return int(ExitCode.IO)
    return int(ExitCode.OK)


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
