import logging
from typing import Callable, Dict, List, Optional, Protocol, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.special import expit
from sklearn.ensemble import RandomForestClassifier
from sklearn.metrics import accuracy_score, f1_score, roc_auc_score
from sklearn.model_selection import StratifiedKFold
from sklearn.preprocessing import StandardScaler

from src.models.dataset import Dataset
from src.schemas.schemas import (FEATURE_GROUPS, EvalReport, FoldMetrics, ForestConfig, LogisticConfig,
                                 Task)
from src.services.errors import InvalidInputError
from config import settings

logger = logging.getLogger(__name__)

THRESHOLD = 0.5
FOREST_FORMAT = "recurring-cascades-forest"
FOREST_FORMAT_VERSION = 1


class Model(Protocol):
    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Probability of the positive class per row."""


Trainer = Callable[[Dataset], Model]


class ForestModel:
    """
    Random forest of CART trees. Trained on a single class it keeps no trees
    and predicts that class with certainty; `degenerate` is set then.
    """

    def __init__(self, feature_names: Sequence[str], forest: Optional[RandomForestClassifier] = None,
                 constant: Optional[float] = None):
        self.feature_names = tuple(feature_names)
        self.forest = forest
        self.constant = constant

    @property
    def degenerate(self) -> bool:
        return self.forest is None

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.forest is None:
            return np.full(X.shape[0], self.constant, dtype=float)
        positive = list(self.forest.classes_).index(1)
        return self.forest.predict_proba(X)[:, positive]

    def to_records(self) -> dict:
        """The forest as nested split records: inner nodes hold feature, threshold, left and right; leaves p."""
        trees = []
        if self.forest is not None:
            positive = list(self.forest.classes_).index(1)
            for estimator in self.forest.estimators_:
                trees.append(_tree_records(estimator.tree_, 0, positive))
        return {
            "format": FOREST_FORMAT,
            "version": FOREST_FORMAT_VERSION,
            "feature_names": list(self.feature_names),
            "constant": self.constant,
            "trees": trees,
        }


def _tree_records(tree, node: int, positive: int) -> dict:
    left, right = int(tree.children_left[node]), int(tree.children_right[node])
    if left == right:
        value = tree.value[node][0]
        return {"p": float(value[positive] / value.sum())}
    return {
        "feature": int(tree.feature[node]),
        "threshold": float(tree.threshold[node]),
        "left": _tree_records(tree, left, positive),
        "right": _tree_records(tree, right, positive),
    }


class TreeEnsemble:
    """
    A forest rebuilt from its split records. Rows go left when the feature,
    rounded to single precision as the trainer stores it, is at most the
    threshold.
    """

    def __init__(self, records: dict):
        if records.get("format") != FOREST_FORMAT:
            raise InvalidInputError("not a serialized forest")
        if records.get("version") != FOREST_FORMAT_VERSION:
            raise InvalidInputError(f"unsupported forest version {records.get('version')}")
        self.feature_names = tuple(records["feature_names"])
        self.constant = records.get("constant")
        self.trees: List[dict] = records["trees"]
        if not self.trees and self.constant is None:
            raise InvalidInputError("forest has neither trees nor a constant prediction")

    @staticmethod
    def _leaf(tree: dict, row: np.ndarray) -> float:
        node = tree
        while "p" not in node:
            node = node["left"] if row[node["feature"]] <= node["threshold"] else node["right"]
        return node["p"]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float32).astype(np.float64)
        if not self.trees:
            return np.full(X.shape[0], self.constant, dtype=float)
        return np.array([np.mean([self._leaf(tree, row) for tree in self.trees]) for row in X])


def train_random_forest(train: Dataset, config: ForestConfig = ForestConfig()) -> ForestModel:
    """
    Fits bagged Gini trees; each split considers `features_per_split` random
    features and trees grow to `max_depth` with at least `min_leaf` rows per
    leaf. Predictions average the per-tree leaf class frequencies.
    """
    classes = np.unique(train.y)
    if classes.size == 1:
        logger.warning("training data holds only class %d, forest is constant", classes[0])
        return ForestModel(train.feature_names, constant=float(classes[0]))
    forest = RandomForestClassifier(
        n_estimators=config.n_trees,
        criterion="gini",
        max_depth=config.max_depth,
        min_samples_leaf=config.min_leaf,
        max_features=min(config.features_per_split, train.X.shape[1]),
        bootstrap=config.bootstrap,
        random_state=config.rng_seed,
        n_jobs=settings.THREADS,
    )
    forest.fit(train.X, train.y)
    return ForestModel(train.feature_names, forest=forest)


class LogisticModel:
    def __init__(self, scaler: StandardScaler, weights: np.ndarray, intercept: float):
        self.scaler = scaler
        self.weights = weights
        self.intercept = intercept

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return expit(self.scaler.transform(np.asarray(X, dtype=float)) @ self.weights + self.intercept)


def train_logistic(train: Dataset, config: LogisticConfig = LogisticConfig()) -> LogisticModel:
    """
    Fits L2-regularized logistic regression by full-batch gradient descent on
    z-normalized features. The intercept starts at the log-odds of the class
    prior, so zero iterations give the prior for every row.
    """
    scaler = StandardScaler().fit(train.X)
    X = scaler.transform(train.X)
    y = train.y.astype(float)
    n = y.size
    prior = np.clip(y.mean(), 1e-6, 1 - 1e-6)
    weights = np.zeros(X.shape[1])
    intercept = float(np.log(prior / (1 - prior)))
    for _ in range(config.iterations):
        residual = expit(X @ weights + intercept) - y
        weights -= config.learning_rate * (X.T @ residual + config.l2 * weights) / n
        intercept -= config.learning_rate * float(residual.mean())
    return LogisticModel(scaler, weights, intercept)


def _check_labels(labels: np.ndarray) -> None:
    if not np.isin(labels, (0, 1)).all():
        raise InvalidInputError("labels must be 0 or 1")


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """
    Probability that a random positive outscores a random negative, ties
    counting one half.

    Raises:
        InvalidInputError: If only one class is present.
    """
    labels = np.asarray(labels)
    _check_labels(labels)
    if np.unique(labels).size < 2:
        raise InvalidInputError("AUC needs both classes")
    return float(roc_auc_score(labels, np.asarray(scores, dtype=float)))


def accuracy(scores: Sequence[float], labels: Sequence[int]) -> float:
    return float(accuracy_score(labels, np.asarray(scores) >= THRESHOLD))


def f1(scores: Sequence[float], labels: Sequence[int]) -> float:
    """F1 of the positive class with predictions at score >= 0.5."""
    return float(f1_score(labels, (np.asarray(scores) >= THRESHOLD).astype(int), zero_division=0))


def per_feature_auc(dataset: Dataset) -> Dict[str, float]:
    """Each raw feature used as a score, reported as max(AUC, 1 - AUC)."""
    aucs = {}
    for column, name in enumerate(dataset.feature_names):
        auc = roc_auc(dataset.X[:, column], dataset.y)
        aucs[name] = max(auc, 1.0 - auc)
    return aucs


def _score_fold(dataset: Dataset, trainer: Trainer, train_rows: np.ndarray, test_rows: np.ndarray) -> FoldMetrics:
    model = trainer(dataset.subset(train_rows))
    held_out = dataset.subset(test_rows)
    scores = model.predict_proba(held_out.X)
    return FoldMetrics(accuracy=accuracy(scores, held_out.y), f1=f1(scores, held_out.y),
                       roc_auc=roc_auc(scores, held_out.y))


def cross_validate(dataset: Dataset, trainer: Trainer, k: int = 10, rng_seed: int = 0, model_name: str = "model",
                   task: Optional[Task] = None, n_jobs: Optional[int] = None) -> EvalReport:
    """
    Seeded stratified k-fold cross-validation; the report averages the
    per-fold metrics and adds the standalone AUC of every feature.

    Raises:
        InvalidInputError: If k < 2, k exceeds the rows, or a class has fewer
            than k rows so some fold would miss it.
    """
    if k < 2:
        raise InvalidInputError("cross-validation needs at least 2 folds")
    if k > len(dataset):
        raise InvalidInputError(f"{k} folds exceed the {len(dataset)} rows")
    if min(dataset.class_counts()) < k:
        raise InvalidInputError(f"each class needs at least {k} rows, got {dataset.class_counts()}")

    folds = StratifiedKFold(n_splits=k, shuffle=True, random_state=rng_seed).split(dataset.X, dataset.y)
    per_fold = Parallel(n_jobs=n_jobs or settings.THREADS)(
        delayed(_score_fold)(dataset, trainer, train_rows, test_rows) for train_rows, test_rows in folds
    )
    report = EvalReport(
        model=model_name,
        task=task,
        accuracy=float(np.mean([fold.accuracy for fold in per_fold])),
        f1=float(np.mean([fold.f1 for fold in per_fold])),
        roc_auc=float(np.mean([fold.roc_auc for fold in per_fold])),
        per_fold=per_fold,
        per_feature_auc=per_feature_auc(dataset),
    )
    logger.info("%s: accuracy %.3f, f1 %.3f, auc %.3f over %d folds",
                model_name, report.accuracy, report.f1, report.roc_auc, k)
    return report


def feature_group_ablation(dataset: Dataset, trainer: Trainer, k: int = 10, rng_seed: int = 0) -> pd.DataFrame:
    """
    Cross-validated scores for each feature group alone and for the groups
    added one after another in their canonical order.
    """
    rows = []
    cumulative: List[str] = []
    for group, names in FEATURE_GROUPS.items():
        cumulative.extend(names)
        for mode, features in (("alone", list(names)), ("cumulative", list(cumulative))):
            report = cross_validate(dataset.select(features), trainer, k, rng_seed, model_name=group)
            rows.append({"group": group, "mode": mode, "features": len(features),
                         "accuracy": report.accuracy, "f1": report.f1, "roc_auc": report.roc_auc})
    return pd.DataFrame(rows, columns=["group", "mode", "features", "accuracy", "f1", "roc_auc"])
