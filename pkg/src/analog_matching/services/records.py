"""Provenance header shared by the CSV result files.

A result file opens with ``#`` lines carrying the package version and the
resolved configuration as JSON; the CSV table follows.
"""

import json
from collections.abc import Iterable, Iterator
from pathlib import Path
from typing import TextIO

from analog_matching import __version__
from analog_matching.exceptions import ConfigError

COMMENT = "#"


def write_provenance(f: TextIO, config: dict) -> None:
    f.write(f"{COMMENT} version: {__version__}\n")
    f.write(f"{COMMENT} config: {json.dumps(config, sort_keys=True)}\n")


def table_lines(lines: Iterable[str]) -> Iterator[str]:
    """The CSV part of a result file, provenance lines dropped."""
    return (line for line in lines if not line.startswith(COMMENT))


def read_provenance(path: str | Path) -> dict:
    """Version and configuration embedded at the top of a result file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError("result file not found", str(path))
    header = {}
    with open(path, newline="") as f:
        for line in f:
            if not line.startswith(COMMENT):
                break
            key, _, value = line[len(COMMENT) :].strip().partition(": ")
            header[key] = value
    if "version" not in header or "config" not in header:
        raise ConfigError("result file carries no provenance header", str(path))
    try:
        header["config"] = json.loads(header["config"])
    except json.JSONDecodeError as e:
        raise ConfigError(f"unreadable embedded configuration: {e}", str(path)) from e
    return header
