"""Content-addressed file cache shared by the generation, judging, and embedding stages.

Records are written atomically (temp file + rename) so concurrent readers
never observe partial writes and interrupted runs can resume cleanly.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path


def content_key(*parts: bytes | str) -> str:
    """Stable hex key derived from an ordered list of byte/string parts."""
    h = hashlib.sha256()
    for part in parts:
        data = part.encode("utf-8") if isinstance(part, str) else part
        h.update(len(data).to_bytes(8, "little"))
        h.update(data)
    return h.hexdigest()


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_append_line(path: Path, line: str) -> None:
    """Append one newline-terminated record; a single write keeps lines whole."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as f:
        f.write(line.rstrip("\n") + "\n")
        f.flush()
        os.fsync(f.fileno())


class FileCache:
    """One file per record under a root directory, keyed by hex digest."""

    def __init__(self, root: Path | str):
        self.root = Path(root)

    def _path(self, key: str, suffix: str) -> Path:
        return self.root / key[:2] / (key + suffix)

    def get_bytes(self, key: str, suffix: str = ".bin") -> bytes | None:
        p = self._path(key, suffix)
        if not p.exists():
            return None
        return p.read_bytes()

    def put_bytes(self, key: str, data: bytes, suffix: str = ".bin") -> None:
        atomic_write_bytes(self._path(key, suffix), data)

    def get_json(self, key: str):
        raw = self.get_bytes(key, ".json")
        return None if raw is None else json.loads(raw.decode("utf-8"))

    def put_json(self, key: str, obj) -> None:
        data = json.dumps(obj, sort_keys=True, ensure_ascii=False).encode("utf-8")
        self.put_bytes(key, data, ".json")
