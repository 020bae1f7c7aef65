import logging
from argparse import Namespace
from typing import Callable, List

from src.repository.configs import sha256_file
from src.repository.reports import read_manifest
from src.services.errors import InvalidInputError, UsageError

logger = logging.getLogger(__name__)


def cmd_replay(args: Namespace, run: Callable[[List[str]], int]) -> int:
    """
    Re-executes the argv recorded in a run manifest after checking that the
    config and inputs still hash to their recorded values.

    Raises:
        InvalidInputError: If a recorded file changed since the run.
    """
    if not args.manifest:
        raise UsageError("replay needs a manifest path")
    manifest = read_manifest(args.manifest)
    if manifest.command == "replay":
        raise UsageError("a replay manifest cannot be replayed")
    for path, digest in {**manifest.configs, **manifest.inputs}.items():
        if sha256_file(path) != digest:
            raise InvalidInputError(f"{path} changed since the recorded run")
    logger.info("replaying %s", " ".join(manifest.argv))
    return run(manifest.argv)
