import json
from pathlib import Path

from src.services.errors import InvalidInputError, StorageError
from src.services.predict import ForestModel, TreeEnsemble


def dump_forest_json(model: ForestModel, path: str | Path) -> Path:
    """Writes a trained forest as versioned JSON of nested split records."""
    path = Path(path)
    try:
        path.write_text(json.dumps(model.to_records(), indent=1) + "\n", encoding="utf-8")
    except OSError as err:
        raise StorageError(f"cannot write model {path}: {err}")
    return path


def load_forest_json(path: str | Path) -> TreeEnsemble:
    try:
        records = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as err:
        raise StorageError(f"cannot read model {path}: {err}")
    except ValueError as err:
        raise StorageError(f"{path} is not JSON: {err}")
    try:
        return TreeEnsemble(records)
    except (InvalidInputError, KeyError, TypeError) as err:
        raise StorageError(f"{path}: {getattr(err, 'detail', err)}")
