"""*******************************************************************************
* Copyright (c) 2024 PNMF contributors
*
* All rights reserved. This program and the accompanying materials
* are made available under the terms of MIT and  is provided "as is",
* without warranty of any kind, express or implied, including but
* not limited to the warranties of merchantability, fitness for a
* particular purpose and noninfringement. In no event shall the
* authors, contributors or copyright holders be liable for any claim,
* damages or other liability, whether in an action of contract,
* tort or otherwise, arising from, out of or in connection with the software
* or the use or other dealings in the software.
*
* Contributors:
*    -
*******************************************************************************

Run artifacts: the JSON manifest written next to every output set, and staging of the
files a command writes so that a failed command leaves nothing half written behind.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Any, Final, Optional

LOGGER = logging.getLogger(__name__)

MANIFEST_NAME: Final[str] = "manifest.json"
MANIFEST_FORMAT: Final[int] = 1


def tool_version() -> str:
    try:
        return metadata.version("pnmf-cli")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunManifest:
    """
    Everything needed to repeat a command: its configs, seed, inputs and outputs.
    Paths of outputs are relative to the manifest, inputs are kept as given
    """

    command: str
    seed: int
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    unmix_config: Optional[dict[str, Any]] = None
    synth_config: Optional[dict[str, Any]] = None
    extra: dict[str, Any] = field(default_factory=dict)
    tool_version: str = field(default_factory=tool_version)
    format: int = MANIFEST_FORMAT

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    def write(self, path: Path | str):
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> "RunManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        if not path.is_file():
            raise FileNotFoundError(f"No run manifest at {path}")
        raw = json.loads(path.read_text(encoding="utf-8"))
        if raw.get("format") != MANIFEST_FORMAT:
            raise ValueError(f"{path}: unsupported manifest format {raw.get('format')}")
        try:
            return cls(**raw)
        except TypeError as ex:
            raise ValueError(f"{path}: malformed manifest. {ex}") from ex


class StagedOutputs:
    """
    Context manager handing out output paths inside one directory.
    When the block raises, every handed out file is deleted again, and the directory too
    if this run created it and it is left empty.
    """

    def __init__(self, directory: Path | str):
        self.directory = Path(directory)
        self.paths: dict[str, Path] = {}
        self._created_directory = False

    def __enter__(self) -> "StagedOutputs":
        if self.directory.exists() and not self.directory.is_dir():
            raise NotADirectoryError(f"Output location {self.directory} is not a directory")
        if not self.directory.exists():
            self.directory.mkdir(parents=True)
            self._created_directory = True
        return self

    def path(self, name: str) -> Path:
        staged = self.directory / name
        self.paths[name] = staged
        return staged

    def verify(self):
        """
        Raises when a handed out file was not written or is empty
        """
        missing = sorted(name for name, path in self.paths.items() if not path.is_file() or path.stat().st_size == 0)
        if missing:
            raise OSError(f"Outputs were not written to {self.directory}: {missing}")

    def names(self) -> list[str]:
        return sorted(self.paths)

    def __exit__(self, exc_type, exc_value, traceback) -> bool:
        if exc_type is None:
            return False
        for path in self.paths.values():
            path.unlink(missing_ok=True)
        if self._created_directory and not any(self.directory.iterdir()):
            self.directory.rmdir()
        LOGGER.info("Removed %s partial outputs from %s", len(self.paths), self.directory)
        return False
