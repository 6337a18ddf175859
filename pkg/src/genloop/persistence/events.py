"""Event records: the append-only session log schema."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Any

from ..errors import CorruptLogError


class EventKind(str, Enum):
    REQUEST = "REQUEST"
    REPORT = "REPORT"
    CLARIFY_ASK = "CLARIFY_ASK"
    CLARIFY_ANSWER = "CLARIFY_ANSWER"
    PLAN = "PLAN"
    IMAGE = "IMAGE"
    EVAL = "EVAL"
    FEEDBACK = "FEEDBACK"
    VERDICT = "VERDICT"
    DONE = "DONE"
    ERROR = "ERROR"


@dataclass(frozen=True)
class EventRecord:
    session_id: str
    seq: int
    ts: str  # UTC ISO-8601; excluded from replay equality
    kind: EventKind
    payload: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {
            "ts": self.ts,
            "session_id": self.session_id,
            "seq": self.seq,
            "kind": self.kind.value,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EventRecord":
        try:
            return cls(
                session_id=data["session_id"],
                seq=int(data["seq"]),
                ts=data["ts"],
                kind=EventKind(data["kind"]),
                payload=data["payload"],
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise CorruptLogError(f"invalid event record: {exc}") from exc


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()
