"""Plain-text file cache for exact counts.

One record per line, ``key<TAB>decimal-count``; keys look like
``v1:count:<l>:<r>:<n>[:<variant>]``.  Readers load the whole file; a writer
merges its record into the latest file contents and atomically replaces it.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Optional

FILENAME = "counts.tsv"


def make_key(ell: int, r: int, n: int, variant: Optional[str] = None) -> str:
    key = f"v1:count:{ell}:{r}:{n}"
    return f"{key}:{variant}" if variant else key


def _read(path: Path) -> dict[str, int]:
    data: dict[str, int] = {}
    if not path.exists():
        return data
    with open(path, encoding="ascii") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            key, _, value = line.partition("\t")
            data[key] = int(value)
    return data


class CountCache:
    def __init__(self, directory: str | os.PathLike):
        self.dir = Path(directory)
        self.path = self.dir / FILENAME
        self._data = _read(self.path)

    def __contains__(self, key: str) -> bool:
        return key in self._data

    def __len__(self) -> int:
        return len(self._data)

    def get(self, key: str) -> Optional[int]:
        return self._data.get(key)

    def put(self, key: str, value: int) -> None:
        if value < 0:
            raise ValueError("counts are nonnegative")
        self.dir.mkdir(parents=True, exist_ok=True)
        merged = _read(self.path)
        merged.update(self._data)
        merged[key] = value
        fd, tmp = tempfile.mkstemp(dir=self.dir, prefix=".counts-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="ascii") as fh:
                for k in sorted(merged):
                    fh.write(f"{k}\t{merged[k]}\n")
            os.replace(tmp, self.path)
        except BaseException:
            os.unlink(tmp)
            raise
        self._data = merged
