"""Pipeline orchestration: interpret -> generate -> evaluate -> regenerate.

The session is an event-sourced state machine. Every step appends its record
to the log first and then folds it into the in-memory state with the exact
same fold used by replay, so a crash at any boundary resumes without
repeating completed backend calls, and replaying a finished log reproduces
the live final state.

Termination is hard: no input or backend behavior can produce more than
max_regen + 1 generation attempts. Interactive sessions suspend at
AWAITING_CLARIFICATION / AWAITING_FEEDBACK and release their worker; in
automatic mode those states are unreachable and the interaction handler is
never invoked.
"""

from __future__ import annotations

import hashlib
import logging
import tempfile
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from pathlib import Path

from .backends import BackendSuite
from .engine import GenerationEngine, TaskContext
from .errors import (
    BackendError,
    FormatError,
    PipelineError,
    RegionExtractionError,
    ScoreRangeError,
    StateError,
    UnknownElementError,
    ValidationError,
)
from .evaluator import QualityEvaluator, recommends_generation, render_verdict
from .interpreter import InputInterpreter
from .persistence import ArtifactStore, EventKind, EventLog, EventRecord, SessionFold, fold_events, utc_now_iso
from .session import (
    AmbiguousElement,
    ClarificationAnswer,
    ContinueDecision,
    CreativityLevel,
    EvaluationResult,
    GenerationRequest,
    SessionState,
    SessionStatus,
    new_session,
    should_continue,
)

logger = logging.getLogger(__name__)

_AGENT_ERRORS = (BackendError, FormatError, ScoreRangeError, RegionExtractionError, ValidationError)


@dataclass(frozen=True)
class RunConfig:
    threshold: float = 8.0
    max_regen: int = 3
    creativity_default: CreativityLevel = CreativityLevel.MEDIUM

    def validate(self) -> None:
        if not 0.0 <= self.threshold <= 10.0:
            raise ValidationError(f"threshold {self.threshold} outside [0, 10]")
        if self.max_regen < 0:
            raise ValidationError("max_regen must be nonnegative")


@dataclass
class FeedbackResponse:
    text: str | None = None
    accept: bool = False
    regenerate: bool = False
    mask: bytes | None = None


@dataclass(frozen=True)
class FinalResult:
    image: str | None
    session_id: str
    accepted: bool
    turns: int


class InteractionHandler(ABC):
    """Human-in-the-loop callback surface."""

    @abstractmethod
    def ask_clarifications(self, questions: list[AmbiguousElement]) -> list[ClarificationAnswer]:
        ...

    @abstractmethod
    def request_feedback(self, image: bytes | None, evaluation: EvaluationResult) -> FeedbackResponse:
        ...

    def request_canvas_mask(self, image: bytes | None) -> bytes | None:
        return None


class AutomaticHandler(InteractionHandler):
    """Returns the empty answer immediately; never blocks."""

    def ask_clarifications(self, questions: list[AmbiguousElement]) -> list[ClarificationAnswer]:
        return []

    def request_feedback(self, image: bytes | None, evaluation: EvaluationResult) -> FeedbackResponse:
        return FeedbackResponse()


def regeneration_context(state: SessionState) -> TaskContext:
    """Context for the next attempt: last suggestions, feedback, and image.

    forced_generate is set when the last evaluation's suggestions recommend
    abandoning the editing backend.
    """
    if not state.turns:
        raise StateError("regeneration context requires at least one turn")
    last = state.turns[-1]
    suggestions = last.evaluation.improvement_suggestions or None
    return TaskContext(
        report=state.report,
        request=state.request,
        improvement_suggestions=suggestions,
        user_feedback=last.user_feedback,
        previous_image=last.image,
        forced_generate=recommends_generation(suggestions or ""),
    )


def _turn_seed(base_seed: int, session_id: str, turn_index: int) -> int:
    digest = hashlib.sha256(f"{base_seed}:{session_id}:{turn_index}".encode()).digest()
    return int.from_bytes(digest[:4], "big") % (2**31)


class SessionRunner:
    """Advances sessions step by step; one logical worker per session."""

    def __init__(
        self,
        backends: BackendSuite,
        store_root: str | Path,
        config: RunConfig | None = None,
        *,
        base_seed: int = 0,
        image_size: tuple[int, int] = (1024, 1024),
        durable: bool = True,
    ):
        self.backends = backends
        self.config = config or RunConfig()
        self.config.validate()
        self.base_seed = base_seed
        self.image_size = image_size
        self.log = EventLog(store_root, durable=durable)
        self.artifacts = ArtifactStore(store_root)
        self.interpreter = InputInterpreter(backends.chat, load_image=self.artifacts.load)
        self.evaluator = QualityEvaluator(
            backends.chat, threshold=self.config.threshold, load_image=self.artifacts.load
        )
        self._folds: dict[str, SessionFold] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    # -- session lifecycle ---------------------------------------------------

    def create(self, request: GenerationRequest, *, session_id: str | None = None) -> SessionState:
        state = new_session(request, session_id=session_id)
        fold = SessionFold()
        with self._lock(state.id):
            self._folds[state.id] = fold
            self._append(fold, state.id, EventKind.REQUEST, request.to_dict())
        return fold.state

    def state(self, session_id: str) -> SessionState:
        return self._fold(session_id).state

    def advance(self, session_id: str) -> SessionState:
        """Run until the session suspends, finishes, or fails."""
        with self._lock(session_id):
            fold = self._fold(session_id)
            while True:
                action = self._next_action(fold)
                if action in ("suspend", "terminal"):
                    return fold.state
                try:
                    if action == "analyze":
                        self._step_analyze(fold)
                    elif action == "resolve_finalize":
                        self._step_resolve_finalize(fold)
                    elif action == "plan":
                        self._step_plan(fold)
                    elif action == "execute":
                        self._step_execute(fold)
                    elif action == "evaluate":
                        self._step_evaluate(fold)
                    elif action == "verdict":
                        self._step_verdict(fold)
                    elif action == "decide":
                        self._step_decide(fold)
                except _AGENT_ERRORS as exc:
                    self._handle_agent_error(fold, exc)
                    return fold.state

    def accept_answers(self, session_id: str, answers: list[ClarificationAnswer]) -> SessionState:
        """Record clarification answers without advancing (fast, no model calls)."""
        with self._lock(session_id):
            fold = self._fold(session_id)
            state = fold.state
            if state.status is not SessionStatus.AWAITING_CLARIFICATION:
                raise StateError(f"session is {state.status.value}, not awaiting clarification")
            pending = {el.element for el in state.report.pending_elements}
            for answer in answers:
                answer.validate()
                if answer.element not in pending:
                    raise UnknownElementError(f"no pending ambiguity named {answer.element!r}")
            self._append(fold, state.id, EventKind.CLARIFY_ANSWER, {"answers": [a.to_dict() for a in answers]})
            return fold.state

    def resume_with_answers(self, session_id: str, answers: list[ClarificationAnswer]) -> SessionState:
        """Deliver clarification answers and continue the pipeline."""
        self.accept_answers(session_id, answers)
        return self.advance(session_id)

    def accept_feedback(self, session_id: str, feedback: FeedbackResponse) -> SessionState:
        """Record turn feedback without advancing."""
        with self._lock(session_id):
            fold = self._fold(session_id)
            state = fold.state
            if state.status is not SessionStatus.AWAITING_FEEDBACK:
                raise StateError(f"session is {state.status.value}, not awaiting feedback")
            mask_handle = None
            if feedback.mask is not None:
                mask_handle = self.artifacts.store(feedback.mask, session_id=session_id).hash
            self._append(
                fold,
                state.id,
                EventKind.FEEDBACK,
                {
                    "text": feedback.text,
                    "accept": bool(feedback.accept),
                    "regenerate": bool(feedback.regenerate),
                    "mask": mask_handle,
                },
            )
            return fold.state

    def submit_feedback(self, session_id: str, feedback: FeedbackResponse) -> SessionState:
        """Deliver turn feedback (text / accept / regenerate / canvas mask)."""
        self.accept_feedback(session_id, feedback)
        return self.advance(session_id)

    def final_result(self, session_id: str) -> FinalResult:
        fold = self._fold(session_id)
        state = fold.state
        if state.status is SessionStatus.FAILED:
            raise PipelineError(self._failure_message(fold), session_id=session_id)
        done = fold.done_payload or {}
        image = done.get("final_image") or (state.turns[-1].image if state.turns else None)
        return FinalResult(
            image=image,
            session_id=session_id,
            accepted=bool(done.get("accepted", False)),
            turns=len(state.turns),
        )

    # -- step dispatch ---------------------------------------------------------

    def _next_action(self, fold: SessionFold) -> str:
        state = fold.state
        if state.status in (SessionStatus.DONE, SessionStatus.FAILED):
            return "terminal"
        if state.status in (SessionStatus.AWAITING_CLARIFICATION, SessionStatus.AWAITING_FEEDBACK):
            return "suspend"
        if state.status is SessionStatus.INTERPRETING:
            return "analyze" if state.report is None else "resolve_finalize"
        if state.status is SessionStatus.GENERATING:
            return "execute" if fold.pending_plan is not None else "plan"
        # EVALUATING
        if fold.pending_image is not None:
            return "evaluate"
        if fold.last_kind is EventKind.EVAL:
            return "verdict"
        return "decide"

    def _step_analyze(self, fold: SessionFold) -> None:
        state = fold.state
        draft = self.interpreter.analyze_input(state.request)
        if state.request.interactive and draft.pending_elements:
            self._append(
                fold,
                state.id,
                EventKind.CLARIFY_ASK,
                {
                    "draft": draft.to_dict(),
                    "questions": [
                        {"element": el.element, "questions": list(el.clarification_questions)}
                        for el in draft.pending_elements
                    ],
                },
            )
            return  # suspended
        resolved = self.interpreter.resolve_ambiguities(draft, state.request, [])
        report = self.interpreter.finalize_report(resolved, state.request)
        self._append(fold, state.id, EventKind.REPORT, report.to_dict())

    def _step_resolve_finalize(self, fold: SessionFold) -> None:
        state = fold.state
        answers = list(fold.pending_answers)
        resolved = self.interpreter.resolve_ambiguities(state.report, state.request, answers)
        report = self.interpreter.finalize_report(resolved, state.request)
        self._append(fold, state.id, EventKind.REPORT, report.to_dict())

    def _step_plan(self, fold: SessionFold) -> None:
        state = fold.state
        engine = self._engine(state.id)
        if state.turns:
            ctx = regeneration_context(state)
            feedback = fold.last_feedback or {}
            if feedback.get("mask"):
                ctx = replace(ctx, canvas_mask=feedback["mask"])
        else:
            ctx = TaskContext(report=state.report, request=state.request)
        task, _rationale = engine.identify_task(ctx)
        plan = engine.prepare_plan(ctx, task)
        plan = engine.resolve_edit_mask(plan, ctx)  # no-op for GENERATE
        self._append(fold, state.id, EventKind.PLAN, plan.to_dict())

    def _step_execute(self, fold: SessionFold) -> None:
        state = fold.state
        engine = self._engine(state.id)
        seed = _turn_seed(self.base_seed, state.id, len(state.turns))
        handle, record = engine.execute_plan(fold.pending_plan, seed=seed)
        self._append(
            fold,
            state.id,
            EventKind.IMAGE,
            {
                "artifact": handle,
                "seed": record.seed,
                "backend": record.backend_id,
                "latency_ms": round(record.latency_ms, 3),
            },
        )

    def _step_evaluate(self, fold: SessionFold) -> None:
        state = fold.state
        threshold, _ = self._effective(state.request)
        evaluation = self.evaluator.evaluate(fold.pending_image, state.request, state.report, threshold=threshold)
        self._append(fold, state.id, EventKind.EVAL, evaluation.to_dict())

    def _step_verdict(self, fold: SessionFold) -> None:
        state = fold.state
        threshold, _ = self._effective(state.request)
        verdict = render_verdict(state.last_turn.evaluation, threshold)
        self._append(fold, state.id, EventKind.VERDICT, verdict.to_dict())

    def _step_decide(self, fold: SessionFold) -> None:
        state = fold.state
        threshold, max_regen = self._effective(state.request)
        feedback = fold.last_feedback or {}
        if feedback.get("accept"):
            self._finish(fold, accepted=True, reason="user_accept")
            return
        if feedback.get("regenerate") and state.regen_count < max_regen:
            self._step_plan(fold)
            return
        decision = should_continue(state, threshold, max_regen)
        if decision is ContinueDecision.STOP_ACCEPTED:
            self._finish(fold, accepted=True, reason="threshold")
        elif decision is ContinueDecision.STOP_EXHAUSTED:
            self._finish(fold, accepted=False, reason="exhausted")
        else:
            self._step_plan(fold)

    def _finish(self, fold: SessionFold, *, accepted: bool, reason: str) -> None:
        state = fold.state
        self._append(
            fold,
            state.id,
            EventKind.DONE,
            {
                "accepted": accepted,
                "reason": reason,
                "turns": len(state.turns),
                "final_image": state.turns[-1].image if state.turns else None,
            },
        )

    def _handle_agent_error(self, fold: SessionFold, exc: Exception) -> None:
        state = fold.state
        logger.error("session %s: agent error: %s", state.id, exc)
        self._append(
            fold,
            state.id,
            EventKind.ERROR,
            {"error": type(exc).__name__, "message": str(exc)},
        )
        if state.turns:
            # keep the last good image rather than failing the whole run
            self._finish(fold, accepted=False, reason="error_fallback")

    # -- plumbing ---------------------------------------------------------------

    def _effective(self, request: GenerationRequest) -> tuple[float, int]:
        threshold, max_regen = self.config.threshold, self.config.max_regen
        if request.overrides:
            if request.overrides.threshold is not None:
                threshold = request.overrides.threshold
            if request.overrides.max_regen is not None:
                max_regen = request.overrides.max_regen
        return threshold, max_regen

    def _engine(self, session_id: str) -> GenerationEngine:
        return GenerationEngine(
            self.backends,
            store_artifact=lambda data: self.artifacts.store(data, session_id=session_id).hash,
            load_artifact=self.artifacts.load,
            width=self.image_size[0],
            height=self.image_size[1],
        )

    def _append(self, fold: SessionFold, session_id: str, kind: EventKind, payload: dict) -> None:
        record = EventRecord(
            session_id=session_id, seq=fold.seq + 1, ts=utc_now_iso(), kind=kind, payload=payload
        )
        self.log.append(record)  # write-ahead: durable before the state change
        fold.apply(record)

    def _fold(self, session_id: str) -> SessionFold:
        fold = self._folds.get(session_id)
        if fold is None:
            fold = fold_events(self.log.read(session_id))  # raises UnknownSessionError
            self._folds[session_id] = fold
        return fold

    def _lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            if session_id not in self._locks:
                self._locks[session_id] = threading.Lock()
            return self._locks[session_id]

    def _failure_message(self, fold: SessionFold) -> str:
        return fold.error_message or "pipeline failed"


def run_pipeline(
    request: GenerationRequest,
    config: RunConfig | None = None,
    handler: InteractionHandler | None = None,
    backends: BackendSuite | None = None,
    *,
    store_root: str | Path | None = None,
    base_seed: int = 0,
    session_id: str | None = None,
    runner: SessionRunner | None = None,
) -> FinalResult:
    """Execute one full pipeline run, pumping the handler at suspension points.

    The handler is only consulted in interactive mode; automatic runs never
    reach a suspension point.
    """
    if runner is None:
        if backends is None:
            raise ValidationError("run_pipeline requires backends (or a prepared runner)")
        store_root = store_root or tempfile.mkdtemp(prefix="genloop-")
        runner = SessionRunner(backends, store_root, config, base_seed=base_seed)
    handler = handler or AutomaticHandler()

    state = runner.create(request, session_id=session_id)
    sid = state.id
    state = runner.advance(sid)
    while state.status in (SessionStatus.AWAITING_CLARIFICATION, SessionStatus.AWAITING_FEEDBACK):
        if state.status is SessionStatus.AWAITING_CLARIFICATION:
            answers = handler.ask_clarifications(list(state.report.pending_elements))
            state = runner.resume_with_answers(sid, answers)
        else:
            last = state.last_turn
            image_bytes = runner.artifacts.load(last.image)
            response = handler.request_feedback(image_bytes, last.evaluation)
            state = runner.submit_feedback(sid, response)
    return runner.final_result(sid)
