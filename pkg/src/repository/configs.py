import hashlib
import json
import logging
import tomllib
from pathlib import Path
from typing import Type, TypeVar

from pydantic import BaseModel

from src.services.errors import StorageError, UsageError

logger = logging.getLogger(__name__)

ConfigModel = TypeVar("ConfigModel", bound=BaseModel)


def sha256_file(path: str | Path) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as err:
        raise StorageError(f"cannot hash {path}: {err}")


def read_config_data(path: str | Path) -> dict:
    """
    Reads a TOML or JSON experiment config into a plain dict.

    Raises:
        UsageError: If the file does not exist.
        StorageError: If it cannot be read or parsed.
    """
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file {path} not found")
    try:
        raw = path.read_bytes()
        if path.suffix.lower() == ".json":
            return json.loads(raw)
        return tomllib.loads(raw.decode("utf-8"))
    except OSError as err:
        raise StorageError(f"cannot read config {path}: {err}")
    except (ValueError, tomllib.TOMLDecodeError) as err:
        raise StorageError(f"cannot parse config {path}: {err}")


def load_config(path: str | Path, model: Type[ConfigModel], **overrides) -> ConfigModel:
    """Validates a config file into `model`; keyword overrides win over file values."""
    data = read_config_data(path)
    data.update({key: value for key, value in overrides.items() if value is not None})
    config = model.model_validate(data)
    logger.debug("loaded %s from %s", model.__name__, path)
    return config
