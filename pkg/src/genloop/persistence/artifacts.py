"""Content-addressed artifact store for images and masks.

Layout: <root>/sessions/<session_id>/artifacts/<sha256>.png. Stored bytes
are immutable; storing the same bytes twice yields the same ref and one
physical copy. A root-level JSON index maps hashes to paths so artifacts
can be fetched without knowing their session.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path

from ..errors import StorageError, ValidationError


@dataclass(frozen=True)
class ArtifactRef:
    hash: str
    media_type: str
    length: int
    path: str  # relative to the store root

    def to_dict(self) -> dict:
        return {"hash": self.hash, "media_type": self.media_type, "length": self.length, "path": self.path}


_ROOT_LOCKS: dict[str, threading.Lock] = {}
_ROOT_LOCKS_GUARD = threading.Lock()


def _lock_for_root(root: Path) -> threading.Lock:
    key = str(root.resolve())
    with _ROOT_LOCKS_GUARD:
        if key not in _ROOT_LOCKS:
            _ROOT_LOCKS[key] = threading.Lock()
        return _ROOT_LOCKS[key]


class ArtifactStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._index_path = self.root / "artifacts_index.json"
        # shared per root path: several store instances may serve one tree
        self._lock = _lock_for_root(self.root)
        self._index: dict[str, str] = {}
        if self._index_path.exists():
            self._index = json.loads(self._index_path.read_text("utf-8"))

    def store(self, data: bytes, media_type: str = "image/png", *, session_id: str = "shared") -> ArtifactRef:
        if not data:
            raise ValidationError("refusing to store empty artifact")
        digest = hashlib.sha256(data).hexdigest()
        rel = f"sessions/{session_id}/artifacts/{digest}.png"
        target = self.root / rel
        if digest not in self._index:
            try:
                target.parent.mkdir(parents=True, exist_ok=True)
                tmp = target.with_suffix(".tmp")
                tmp.write_bytes(data)
                os.replace(tmp, target)
            except OSError as exc:
                raise StorageError(f"cannot write artifact: {exc}") from exc
            with self._lock:
                self._index[digest] = rel
                self._flush_index()
        return ArtifactRef(hash=digest, media_type=media_type, length=len(data), path=self._index[digest])

    def load(self, handle: str) -> bytes:
        path = self._resolve(handle)
        try:
            return path.read_bytes()
        except OSError as exc:
            raise StorageError(f"cannot read artifact {handle}: {exc}") from exc

    def exists(self, handle: str) -> bool:
        try:
            return self._resolve(handle).exists()
        except StorageError:
            return False

    def _resolve(self, handle: str) -> Path:
        rel = self._index.get(handle)
        if rel is None:
            with self._lock:
                self._reload_index()
            rel = self._index.get(handle)
        if rel is None:
            raise StorageError(f"unknown artifact hash {handle!r}")
        return self.root / rel

    def _reload_index(self) -> None:
        if self._index_path.exists():
            on_disk = json.loads(self._index_path.read_text("utf-8"))
            self._index = {**on_disk, **self._index}

    def _flush_index(self) -> None:
        self._reload_index()  # merge entries written by sibling store instances
        tmp = self._index_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self._index, ensure_ascii=True, sort_keys=True), "utf-8")
        os.replace(tmp, self._index_path)
