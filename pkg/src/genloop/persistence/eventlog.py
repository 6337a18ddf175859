"""Append-only JSONL event log with gapless per-session sequences.

One events.jsonl per session directory; appends are flushed and fsynced
before returning. There is deliberately no delete or update API.
"""

from __future__ import annotations

import json
import os
import threading
from collections import OrderedDict
from pathlib import Path
from typing import TextIO

from ..errors import CorruptLogError, SequenceError, UnknownSessionError
from .events import EventRecord

_MAX_OPEN_HANDLES = 64


class EventLog:
    def __init__(self, root: str | Path, *, durable: bool = True):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.durable = durable  # fsync on every append; turn off only for bulk simulation
        self._locks: dict[str, threading.Lock] = {}
        self._last_seq: dict[str, int] = {}
        self._dirs_made: set[str] = set()
        self._handles: OrderedDict[str, TextIO] = OrderedDict()
        self._registry_lock = threading.Lock()

    def _session_dir(self, session_id: str) -> Path:
        return self.root / "sessions" / session_id

    def _log_path(self, session_id: str) -> Path:
        return self._session_dir(session_id) / "events.jsonl"

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            if session_id not in self._locks:
                self._locks[session_id] = threading.Lock()
            return self._locks[session_id]

    def _handle(self, session_id: str) -> TextIO:
        """Open append handle for the session, kept in a small LRU."""
        with self._registry_lock:
            fh = self._handles.get(session_id)
            if fh is not None:
                self._handles.move_to_end(session_id)
                return fh
            path = self._log_path(session_id)
            if session_id not in self._dirs_made:
                path.parent.mkdir(parents=True, exist_ok=True)
                self._dirs_made.add(session_id)
            fh = path.open("a", encoding="utf-8")
            self._handles[session_id] = fh
            while len(self._handles) > _MAX_OPEN_HANDLES:
                _, old = self._handles.popitem(last=False)
                old.close()
            return fh

    def append(self, record: EventRecord) -> None:
        """Durably append one record; seq must be exactly last+1."""
        with self._lock_for(record.session_id):
            last = self._last_seq.get(record.session_id)
            if last is None:
                last = self._scan_last_seq(record.session_id)
            if record.seq != last + 1:
                raise SequenceError(
                    f"session {record.session_id}: expected seq {last + 1}, got {record.seq}"
                )
            line = json.dumps(record.to_dict(), ensure_ascii=True)
            fh = self._handle(record.session_id)
            fh.write(line + "\n")
            fh.flush()
            if self.durable:
                os.fsync(fh.fileno())
            self._last_seq[record.session_id] = record.seq

    def read(self, session_id: str) -> list[EventRecord]:
        path = self._log_path(session_id)
        if not path.exists():
            raise UnknownSessionError(f"no event log for session {session_id!r}")
        records = []
        for lineno, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                records.append(EventRecord.from_dict(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise CorruptLogError(f"{session_id} line {lineno}: {exc}") from exc
        if not records:
            raise UnknownSessionError(f"event log for session {session_id!r} is empty")
        return records

    def read_from(self, session_id: str, after_seq: int) -> list[EventRecord]:
        """Records with seq > after_seq (empty when the session is unknown)."""
        try:
            return [r for r in self.read(session_id) if r.seq > after_seq]
        except UnknownSessionError:
            return []

    def last_seq(self, session_id: str) -> int:
        with self._lock_for(session_id):
            cached = self._last_seq.get(session_id)
            if cached is not None:
                return cached
            return self._scan_last_seq(session_id)

    def session_ids(self) -> list[str]:
        base = self.root / "sessions"
        if not base.exists():
            return []
        return sorted(p.name for p in base.iterdir() if (p / "events.jsonl").exists())

    def _scan_last_seq(self, session_id: str) -> int:
        path = self._log_path(session_id)
        if not path.exists():
            self._last_seq[session_id] = 0
            return 0
        last = 0
        for line in path.read_text("utf-8").splitlines():
            if line.strip():
                last = json.loads(line)["seq"]
        self._last_seq[session_id] = last
        return last
