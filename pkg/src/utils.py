import os
import tempfile
from pathlib import Path
from typing import Union


def atomic_write_bytes(path: Union[str, Path], payload: bytes) -> None:
    """Write bytes to path via a temp file in the same directory, then rename."""
    path = Path(path)
    # Parent directory must already exist.
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    """Text variant of atomic_write_bytes (UTF-8, newline preserved)."""
    atomic_write_bytes(path, text.encode("utf-8"))
