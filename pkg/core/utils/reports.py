"""
Report writer - single place where data files leave the process.
"""
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"


class ReportWriter:
    """
    Writes CSV and JSON reports into an output directory.

    Every file is written to a temporary sibling and renamed into place, so an
    interrupted run never leaves a half-written report behind. Contents are a pure
    function of the data (no timestamps), which keeps reruns byte-identical.
    """

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.written: List[Path] = []

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        """Write a table as UTF-8 CSV with '.' decimals and LF line endings."""
        text = frame.to_csv(index=False, lineterminator="\n", float_format=FLOAT_FORMAT)
        return self._write_atomic(f"{name}.csv", text.encode("utf-8"))

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        text = json.dumps(payload, indent=2, sort_keys=True, default=_to_builtin) + "\n"
        return self._write_atomic(f"{name}.json", text.encode("utf-8"))

    def write_text(self, filename: str, text: str) -> Path:
        return self._write_atomic(filename, text.encode("utf-8"))

    def _write_atomic(self, filename: str, data: bytes) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        target = self.out_dir / filename
        fd, tmp_name = tempfile.mkstemp(dir=self.out_dir, prefix=f".{filename}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(data)
                handle.flush()
                os.fsync(handle.fileno())
            os.replace(tmp_name, target)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except FileNotFoundError:
                pass
            raise

        self.written.append(target)
        logger.info("wrote %s (%d bytes)", target, len(data))
        return target


def _to_builtin(value: Any) -> Any:
    """json.dumps fallback for numpy scalars and arrays."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")
