"""Durable session store: append-only event log + content-addressed artifacts."""

from .artifacts import ArtifactRef, ArtifactStore
from .eventlog import EventLog
from .events import EventKind, EventRecord, utc_now_iso
from .replay import SessionFold, fold_events, replay_session

__all__ = [
    "ArtifactRef",
    "ArtifactStore",
    "EventKind",
    "EventLog",
    "EventRecord",
    "SessionFold",
    "fold_events",
    "replay_session",
    "utc_now_iso",
]
