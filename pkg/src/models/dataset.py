from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import pandas as pd

from src.schemas.schemas import FEATURE_NAMES
from src.services.errors import InvalidInputError


@dataclass(frozen=True)
class Dataset:
    """
    Feature rows with binary labels, one row per cascade (or per copy).

    Columns of `X` follow `feature_names`, which defaults to the canonical
    feature order.
    """
    X: np.ndarray
    y: np.ndarray
    cluster_ids: Tuple[str, ...]
    feature_names: Tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise InvalidInputError("dataset needs a non-empty 2-d feature matrix")
        if X.shape[1] != len(self.feature_names):
            raise InvalidInputError(f"expected {len(self.feature_names)} feature columns, got {X.shape[1]}")
        if y.shape != (X.shape[0],) or len(self.cluster_ids) != X.shape[0]:
            raise InvalidInputError("labels and cluster ids must match the rows")
        if not np.isin(y, (0, 1)).all():
            raise InvalidInputError("labels must be 0 or 1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "cluster_ids", tuple(str(cid) for cid in self.cluster_ids))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self) -> int:
        return int(self.y.size)

    def class_counts(self) -> Tuple[int, int]:
        positives = int(self.y.sum())
        return len(self) - positives, positives

    def subset(self, rows: Sequence[int]) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.X[rows], self.y[rows], tuple(self.cluster_ids[i] for i in rows), self.feature_names)

    def select(self, features: Sequence[str]) -> "Dataset":
        unknown = set(features) - set(self.feature_names)
        if unknown:
            raise InvalidInputError(f"unknown features: {sorted(unknown)}")
        columns = [self.feature_names.index(name) for name in features]
        return Dataset(self.X[:, columns], self.y, self.cluster_ids, tuple(features))

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.X, columns=list(self.feature_names))
        frame["label"] = self.y
        frame["cluster_id"] = list(self.cluster_ids)
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "Dataset":
        missing = {"label", "cluster_id"} - set(frame.columns)
        if missing:
            raise InvalidInputError(f"dataset table lacks columns {sorted(missing)}")
        features = [column for column in frame.columns if column not in ("label", "cluster_id")]
        return cls(frame[features].to_numpy(dtype=float), frame["label"].to_numpy(),
                   tuple(frame["cluster_id"].astype(str)), tuple(features))
