"""
CSV output with provenance headers.

Every file starts with `#` comment lines (resolved config, seed) and is
written to a temporary file in the target directory, then moved into place.
"""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import pandas as pd

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def header_lines(config: Optional[Dict[str, Any]] = None, seed: Optional[int] = None,
                 extra: Sequence[str] = ()) -> list:
    lines = []
    if config is not None:
        lines.append("config: " + json.dumps(config, sort_keys=True, default=str))
    if seed is not None:
        lines.append(f"seed: {seed}")
    lines.extend(extra)
    return lines


def write_csv(frame: pd.DataFrame, path: PathLike, header: Sequence[str] = ()) -> Path:
    """
    Write frame atomically.

    Args:
        frame: Table to write (index is dropped)
        path: Destination file; parent directories are created
        header: Comment lines written before the CSV header, without the '#'

    Returns:
        The destination path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as handle:
            for line in header:
                for part in str(line).splitlines():
                    handle.write(f"# {part}\n")
            frame.to_csv(handle, index=False, lineterminator="\n")
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug("wrote %d rows to %s", len(frame), path)
    return path


def read_csv(path: PathLike) -> pd.DataFrame:
    """Read a file written by write_csv, skipping the comment header."""
    return pd.read_csv(path, comment="#")
