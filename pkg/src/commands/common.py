import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from src.repository.configs import sha256_file
from src.repository.reports import write_manifest
from src.schemas.schemas import RunManifest
from config import VERSION, settings

logger = logging.getLogger(__name__)


@dataclass
class CommandResult:
    """What a subcommand read and wrote, for its run manifest."""
    outputs: List[Path] = field(default_factory=list)
    seeds: Dict[str, int] = field(default_factory=dict)
    inputs: List[Path] = field(default_factory=list)


def resolve_seed(data: dict, seed: Optional[int], key: str = "rng_seed") -> int:
    """
    Picks the seed of a config section: the --seed flag, then the file's
    value, then the SEED setting. The chosen seed is written back into `data`.
    """
    if seed is not None:
        data[key] = seed
    elif key not in data:
        data[key] = settings.SEED
    return int(data[key])


def sidecar(output: str | Path, suffix: str) -> Path:
    """`out/run.csv` with suffix `.summary.csv` gives `out/run.summary.csv`."""
    output = Path(output)
    return output.with_name(output.stem + suffix)


def record_run(command: str, argv: List[str], config: Optional[str], result: CommandResult) -> List[Path]:
    """Writes a manifest next to every output of the run."""
    manifest = RunManifest(
        command=command,
        argv=argv,
        version=VERSION,
        seeds=result.seeds,
        configs={str(config): sha256_file(config)} if config else {},
        inputs={str(path): sha256_file(path) for path in result.inputs},
        outputs=[str(path) for path in result.outputs],
    )
    written = [write_manifest(manifest, output) for output in result.outputs]
    logger.info("%s wrote %s", command, ", ".join(str(path) for path in result.outputs))
    return written
