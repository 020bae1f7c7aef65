import json
import logging
from pathlib import Path
from typing import Iterable, List

import pandas as pd
from pydantic import ValidationError

from src.schemas.schemas import EvalReport, RunManifest
from src.services.errors import StorageError

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest.json"


def write_table(frame: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    try:
        frame.to_csv(path, index=False, lineterminator="\n")
    except OSError as err:
        raise StorageError(f"cannot write table {path}: {err}")
    logger.info("wrote %d rows to %s", len(frame), path)
    return path


def read_table(path: str | Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        raise StorageError(f"cannot read table {path}: {err}")


def reports_frame(reports: Iterable[EvalReport]) -> pd.DataFrame:
    """One row per model and fold plus a `mean` row per model."""
    rows = []
    for report in reports:
        task = report.task.value if report.task else ""
        for fold, metrics in enumerate(report.per_fold, start=1):
            rows.append({"model": report.model, "task": task, "fold": str(fold), **metrics.model_dump()})
        rows.append({"model": report.model, "task": task, "fold": "mean", "accuracy": report.accuracy,
                     "f1": report.f1, "roc_auc": report.roc_auc})
    return pd.DataFrame(rows, columns=["model", "task", "fold", "accuracy", "f1", "roc_auc"])


def summary_text(reports: Iterable[EvalReport], top_features: int = 5) -> str:
    lines: List[str] = []
    for report in reports:
        task = report.task.value if report.task else "-"
        lines.append(f"model {report.model} task {task} folds {len(report.per_fold)}")
        lines.append(f"  accuracy {report.accuracy:.4f}  f1 {report.f1:.4f}  auc {report.roc_auc:.4f}")
        ranked = sorted(report.per_feature_auc.items(), key=lambda item: (-item[1], item[0]))
        for name, auc in ranked[:top_features]:
            lines.append(f"  feature {name:<28} auc {auc:.4f}")
    return "\n".join(lines) + "\n"


def write_text(text: str, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as err:
        raise StorageError(f"cannot write {path}: {err}")
    return path


def manifest_path(output: str | Path) -> Path:
    output = Path(output)
    return output.with_name(output.name + MANIFEST_SUFFIX)


def write_manifest(manifest: RunManifest, output: str | Path) -> Path:
    """Stores the manifest next to `output` as `<output>.manifest.json`."""
    path = manifest_path(output)
    return write_text(json.dumps(manifest.model_dump(), indent=2, sort_keys=True) + "\n", path)


def read_manifest(path: str | Path) -> RunManifest:
    try:
        return RunManifest.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except OSError as err:
        raise StorageError(f"cannot read manifest {path}: {err}")
    except ValidationError as err:
        raise StorageError(f"{path} is not a run manifest: {err}")
