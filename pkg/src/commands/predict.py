import logging
from argparse import Namespace
from functools import partial
from pathlib import Path

import pandas as pd

from src.commands.common import CommandResult, resolve_seed, sidecar
from src.repository.configs import read_config_data
from src.repository.events import read_clusters
from src.repository.graphs import read_graph
from src.repository.models import dump_forest_json
from src.repository.reports import reports_frame, summary_text, write_table, write_text
from src.schemas.schemas import PredictConfig, Task
from src.services.errors import UsageError
from src.services.features import build_dataset, split_by_copy
from src.services.predict import cross_validate, feature_group_ablation, train_logistic, train_random_forest

logger = logging.getLogger(__name__)

TASKS = [task.value for task in Task]


def _predict_config(args: Namespace) -> PredictConfig:
    data = read_config_data(args.config) if args.config else {}
    seed = resolve_seed(data, args.seed)
    forest = data.setdefault("forest", {})
    forest.setdefault("rng_seed", seed)
    if args.seed is not None:
        forest["rng_seed"] = seed
    if args.task:
        data["task"] = args.task
    return PredictConfig.model_validate(data)


def cmd_predict(args: Namespace) -> CommandResult:
    """
    Builds the balanced dataset of a task from an event log, cross-validates
    the configured models and writes:

      - --out: per-fold and mean metrics per model,
      - `<stem>.summary.txt`: readable summary with the strongest features,
      - `<stem>.features.csv`: standalone AUC per feature,
      - `<stem>.dataset.csv`: the dataset itself,
      - `<stem>.forest.json`: the forest refit on all rows, when trained,
      - `<stem>.ablation.csv`: feature group ablation, with --ablation.
    """
    if not args.events or not args.graph or not args.out:
        raise UsageError("predict needs --events, --graph and --out")
    config = _predict_config(args)
    graph = read_graph(args.graph)
    clusters = read_clusters(args.events)
    if config.per_copy:
        clusters = [copy for cluster in clusters for copy in split_by_copy(cluster)]
    dataset = build_dataset(clusters, graph, config.detector, config.task, config.rng_seed, horizon=args.horizon)

    trainers = {}
    if config.model in ("forest", "both"):
        trainers["forest"] = partial(train_random_forest, config=config.forest)
    if config.model in ("logistic", "both"):
        trainers["logistic"] = partial(train_logistic, config=config.logistic)
    reports = [cross_validate(dataset, trainer, config.folds, config.rng_seed, model_name=name, task=config.task)
               for name, trainer in trainers.items()]

    out = Path(args.out)
    features = pd.DataFrame(sorted(reports[0].per_feature_auc.items(), key=lambda item: (-item[1], item[0])),
                            columns=["feature", "auc"])
    outputs = [write_table(reports_frame(reports), out),
               write_text(summary_text(reports), sidecar(out, ".summary.txt")),
               write_table(features, sidecar(out, ".features.csv")),
               write_table(dataset.to_frame(), sidecar(out, ".dataset.csv"))]
    if "forest" in trainers:
        outputs.append(dump_forest_json(trainers["forest"](dataset), sidecar(out, ".forest.json")))
    if args.ablation:
        ablation = feature_group_ablation(dataset, next(iter(trainers.values())), config.folds, config.rng_seed)
        outputs.append(write_table(ablation, sidecar(out, ".ablation.csv")))
    return CommandResult(outputs=outputs, seeds={"predict": config.rng_seed, "forest": config.forest.rng_seed},
                         inputs=[Path(args.events), Path(args.graph)])

