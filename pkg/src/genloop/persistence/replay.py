"""Deterministic fold from event records to session state.

The orchestrator applies this same fold for its live, in-memory state, so
replaying a session log reconstructs a state structurally equal to the live
one at the last event. Timestamps (and timing fields like latency) never
fold into state. Besides the state proper, the fold tracks resume cursors:
a PLAN or IMAGE without its successor means the run crashed mid-turn, and
the recorded payload is reused instead of repeating the backend call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..errors import CorruptLogError, ValidationError
from ..session import (
    AnalysisReport,
    ClarificationAnswer,
    EvaluationResult,
    GenerationPlan,
    GenerationRequest,
    SessionState,
    SessionStatus,
    attach_feedback,
    new_session,
    record_turn,
    with_report,
    with_status,
)
from .events import EventKind, EventRecord
from .eventlog import EventLog


@dataclass
class SessionFold:
    state: SessionState | None = None
    seq: int = 0
    pending_plan: GenerationPlan | None = None
    pending_image: str | None = None
    pending_answers: list[ClarificationAnswer] = field(default_factory=list)
    last_verdict: dict[str, Any] | None = None
    last_feedback: dict[str, Any] | None = None
    last_kind: EventKind | None = None
    done_payload: dict[str, Any] | None = None
    error_message: str | None = None

    def apply(self, record: EventRecord) -> None:
        try:
            self._apply(record)
        except (ValidationError, KeyError, TypeError) as exc:
            raise CorruptLogError(f"seq {record.seq} ({record.kind.value}): {exc}") from exc
        self.last_kind = record.kind
        self.seq = record.seq

    def _apply(self, record: EventRecord) -> None:
        kind, payload = record.kind, record.payload
        if kind is EventKind.REQUEST:
            self.state = new_session(GenerationRequest.from_dict(payload), session_id=record.session_id)
            return
        if self.state is None:
            raise CorruptLogError(f"event {kind.value} before REQUEST")

        if kind is EventKind.CLARIFY_ASK:
            draft = AnalysisReport.from_dict(payload["draft"])
            self.state = with_status(with_report(self.state, draft), SessionStatus.AWAITING_CLARIFICATION)
        elif kind is EventKind.CLARIFY_ANSWER:
            self.pending_answers = [ClarificationAnswer.from_dict(a) for a in payload["answers"]]
            self.state = with_status(self.state, SessionStatus.INTERPRETING)
        elif kind is EventKind.REPORT:
            report = AnalysisReport.from_dict(payload)
            self.state = with_status(with_report(self.state, report), SessionStatus.GENERATING)
            self.pending_answers = []
        elif kind is EventKind.PLAN:
            self.pending_plan = GenerationPlan.from_dict(payload)
            self.state = with_status(self.state, SessionStatus.GENERATING)
        elif kind is EventKind.IMAGE:
            self.pending_image = payload["artifact"]
            self.state = with_status(self.state, SessionStatus.EVALUATING)
        elif kind is EventKind.EVAL:
            if self.pending_plan is None or self.pending_image is None:
                raise CorruptLogError("EVAL without preceding PLAN and IMAGE")
            evaluation = EvaluationResult.from_dict(payload)
            self.state = record_turn(self.state, self.pending_plan, self.pending_image, evaluation)
            self.pending_plan = None
            self.pending_image = None
        elif kind is EventKind.VERDICT:
            self.last_verdict = dict(payload)
            self.last_feedback = None
            if self.state.request.interactive:
                self.state = with_status(self.state, SessionStatus.AWAITING_FEEDBACK)
        elif kind is EventKind.FEEDBACK:
            self.last_feedback = dict(payload)
            text = payload.get("text") or None
            self.state = attach_feedback(self.state, text)
            self.state = with_status(self.state, SessionStatus.EVALUATING)
        elif kind is EventKind.DONE:
            self.done_payload = dict(payload)
            self.state = with_status(self.state, SessionStatus.DONE)
        elif kind is EventKind.ERROR:
            self.error_message = str(payload.get("message", ""))
            self.state = with_status(self.state, SessionStatus.FAILED)


def fold_events(records: list[EventRecord]) -> SessionFold:
    fold = SessionFold()
    for record in records:
        fold.apply(record)
    return fold


def replay_session(log: EventLog, session_id: str) -> SessionState:
    """Rebuild the state a live run held at its last persisted event."""
    fold = fold_events(log.read(session_id))
    if fold.state is None:
        raise CorruptLogError(f"session {session_id!r} has no REQUEST event")
    return fold.state
