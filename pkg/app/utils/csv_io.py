import os
import tempfile
from pathlib import Path

import pandas as pd

from app.exceptions import FileUnwritableError


def write_csv_atomic(frame: pd.DataFrame, path: Path) -> None:
    """Writes `frame` as RFC 4180 CSV (UTF-8, header row) via a temp file and rename."""

    def write(handle) -> None:
        frame.to_csv(handle, index=False, lineterminator="\n")

    _write_atomic(Path(path), write)


def write_text_atomic(text: str, path: Path) -> None:
    _write_atomic(Path(path), lambda handle: handle.write(text))


def _write_atomic(path: Path, write) -> None:
    tmp_path = None
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(
            "w", encoding="utf-8", newline="", dir=path.parent, suffix=".tmp", delete=False
        ) as tmp_file:
            tmp_path = tmp_file.name
            write(tmp_file)
        os.replace(tmp_path, path)
    except OSError as e:
        if tmp_path and os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise FileUnwritableError(str(path), e.strerror or str(e)) from e
