"""Domain types and the session state machine.

Every other module consumes these types; this one owns the continue/stop
decision of the regeneration loop.

Invariants enforced here:
    - regen_count == max(0, len(turns) - 1) once the first turn is recorded
    - a finalized report carries no PENDING ambiguity resolutions
    - EvaluationResult.overall is the arithmetic mean of its 10 sub-scores
    - state values are immutable snapshots; every mutation returns a new state

Serialization is canonical JSON with snake_case field names; it doubles as
the session-log and API payload schema, so round-tripping any value through
to_dict/from_dict must be the identity.
"""

from __future__ import annotations

import math
import secrets
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

from .errors import ArityError, StateError, ValidationError

CREATIVITY_FILL_KEYS = (
    "background",
    "composition",
    "color_harmony",
    "lighting",
    "focus_sharpness",
    "emotional_impact",
    "uniqueness_creativity",
    "visual_style",
)

AESTHETIC_KEYS = (
    "composition",
    "color_harmony",
    "lighting_exposure",
    "focus_sharpness",
    "emotional_impact",
    "uniqueness_creativity",
)

ALIGNMENT_KEYS = (
    "main_subjects_presence",
    "spatial_accuracy",
    "style_adherence",
    "background_representation",
)

SCORE_MEAN_TOLERANCE = 1e-9


class CreativityLevel(str, Enum):
    LOW = "LOW"
    MEDIUM = "MEDIUM"
    HIGH = "HIGH"


class SessionStatus(str, Enum):
    INTERPRETING = "INTERPRETING"
    AWAITING_CLARIFICATION = "AWAITING_CLARIFICATION"
    GENERATING = "GENERATING"
    EVALUATING = "EVALUATING"
    AWAITING_FEEDBACK = "AWAITING_FEEDBACK"
    DONE = "DONE"
    FAILED = "FAILED"


class ResolutionSource(str, Enum):
    PENDING = "PENDING"
    HUMAN = "HUMAN"
    MODEL_FILL = "MODEL_FILL"
    LITERAL = "LITERAL"


class TaskKind(str, Enum):
    GENERATE = "GENERATE"
    EDIT = "EDIT"


class EditMode(str, Enum):
    ADD = "ADD"
    REPLACE = "REPLACE"
    REMOVE = "REMOVE"


class ContinueDecision(str, Enum):
    STOP_ACCEPTED = "STOP_ACCEPTED"
    STOP_EXHAUSTED = "STOP_EXHAUSTED"
    CONTINUE = "CONTINUE"


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValidationError(message)


# ---------------------------------------------------------------------------
# Request
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Overrides:
    """Per-request overrides of the run configuration."""

    threshold: float | None = None
    max_regen: int | None = None

    def validate(self) -> None:
        if self.threshold is not None:
            _require(0.0 <= self.threshold <= 10.0, f"overrides.threshold {self.threshold} outside [0, 10]")
        if self.max_regen is not None:
            _require(self.max_regen >= 0, "overrides.max_regen must be nonnegative")

    def to_dict(self) -> dict[str, Any]:
        return {"threshold": self.threshold, "max_regen": self.max_regen}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Overrides":
        ov = cls(threshold=data.get("threshold"), max_regen=data.get("max_regen"))
        ov.validate()
        return ov


@dataclass(frozen=True)
class GenerationRequest:
    """The user's ask: prompt, optional reference image, knobs."""

    prompt: str
    reference_image: str | None = None
    creativity_level: CreativityLevel = CreativityLevel.MEDIUM
    interactive: bool = False
    overrides: Overrides | None = None

    def validate(self) -> None:
        _require(bool(self.prompt.strip()), "prompt must be nonempty")
        if self.overrides is not None:
            self.overrides.validate()

    def to_dict(self) -> dict[str, Any]:
        return {
            "prompt": self.prompt,
            "reference_image": self.reference_image,
            "creativity_level": self.creativity_level.value,
            "interactive": self.interactive,
            "overrides": self.overrides.to_dict() if self.overrides else None,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "GenerationRequest":
        req = cls(
            prompt=data["prompt"],
            reference_image=data.get("reference_image"),
            creativity_level=CreativityLevel(data.get("creativity_level", "MEDIUM")),
            interactive=bool(data.get("interactive", False)),
            overrides=Overrides.from_dict(data["overrides"]) if data.get("overrides") else None,
        )
        req.validate()
        return req


# ---------------------------------------------------------------------------
# Analysis report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MainSubject:
    name: str
    attributes: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "attributes": self.attributes}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MainSubject":
        return cls(name=data["name"], attributes=data.get("attributes", ""))


@dataclass(frozen=True)
class IdentifiedElements:
    main_subjects: tuple[MainSubject, ...] = ()
    references: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "main_subjects": [s.to_dict() for s in self.main_subjects],
            "references": self.references,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "IdentifiedElements":
        return cls(
            main_subjects=tuple(MainSubject.from_dict(s) for s in data.get("main_subjects", [])),
            references=data.get("references"),
        )


@dataclass(frozen=True)
class AmbiguityResolution:
    source: ResolutionSource = ResolutionSource.PENDING
    answer: str = ""

    def validate(self) -> None:
        if self.source is ResolutionSource.PENDING:
            _require(self.answer == "", "PENDING resolution must carry an empty answer")
        else:
            _require(bool(self.answer), f"{self.source.value} resolution requires a nonempty answer")

    def to_dict(self) -> dict[str, Any]:
        return {"source": self.source.value, "answer": self.answer}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AmbiguityResolution":
        res = cls(source=ResolutionSource(data["source"]), answer=data.get("answer", ""))
        res.validate()
        return res


@dataclass(frozen=True)
class AmbiguousElement:
    element: str
    reason: str
    clarification_questions: tuple[str, ...]
    resolution: AmbiguityResolution = field(default_factory=AmbiguityResolution)

    def validate(self) -> None:
        _require(bool(self.element), "ambiguous element name must be nonempty")
        _require(len(self.clarification_questions) >= 1, "at least one clarification question required")
        self.resolution.validate()

    @property
    def pending(self) -> bool:
        return self.resolution.source is ResolutionSource.PENDING

    def to_dict(self) -> dict[str, Any]:
        return {
            "element": self.element,
            "reason": self.reason,
            "clarification_questions": list(self.clarification_questions),
            "resolution": self.resolution.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AmbiguousElement":
        el = cls(
            element=data["element"],
            reason=data.get("reason", ""),
            clarification_questions=tuple(data.get("clarification_questions", [])),
            resolution=AmbiguityResolution.from_dict(data["resolution"]),
        )
        el.validate()
        return el


@dataclass(frozen=True)
class AnalysisReport:
    """Structured interpretation of the request.

    The same shape serves as the draft (PENDING ambiguities allowed, empty
    detailed_prompt allowed) and the finalized report; `validate(finalized=True)`
    applies the stricter contract.
    """

    identified_elements: IdentifiedElements
    creativity_fills: dict[str, str]
    ambiguous_elements: tuple[AmbiguousElement, ...]
    detailed_prompt: str = ""

    def validate(self, *, finalized: bool = False) -> None:
        missing = [k for k in CREATIVITY_FILL_KEYS if k not in self.creativity_fills]
        _require(not missing, f"creativity_fills missing keys: {missing}")
        extra = [k for k in self.creativity_fills if k not in CREATIVITY_FILL_KEYS]
        _require(not extra, f"creativity_fills has unknown keys: {extra}")
        for el in self.ambiguous_elements:
            el.validate()
        if finalized:
            _require(bool(self.detailed_prompt.strip()), "finalized report requires a nonempty detailed_prompt")
            still_pending = [el.element for el in self.ambiguous_elements if el.pending]
            _require(not still_pending, f"finalized report has PENDING ambiguities: {still_pending}")

    @property
    def pending_elements(self) -> tuple[AmbiguousElement, ...]:
        return tuple(el for el in self.ambiguous_elements if el.pending)

    def to_dict(self) -> dict[str, Any]:
        return {
            "identified_elements": self.identified_elements.to_dict(),
            "creativity_fills": {k: self.creativity_fills.get(k, "") for k in CREATIVITY_FILL_KEYS},
            "ambiguous_elements": [el.to_dict() for el in self.ambiguous_elements],
            "detailed_prompt": self.detailed_prompt,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AnalysisReport":
        report = cls(
            identified_elements=IdentifiedElements.from_dict(data.get("identified_elements", {})),
            creativity_fills=dict(data.get("creativity_fills", {})),
            ambiguous_elements=tuple(AmbiguousElement.from_dict(e) for e in data.get("ambiguous_elements", [])),
            detailed_prompt=data.get("detailed_prompt", ""),
        )
        report.validate()
        return report


# DraftAnalysis is the same structure prior to resolution/finalization.
DraftAnalysis = AnalysisReport


@dataclass(frozen=True)
class ClarificationAnswer:
    """A human answer to one ambiguous element's questions."""

    element: str
    answer: str

    def validate(self) -> None:
        _require(bool(self.element), "answer must name an element")
        _require(bool(self.answer.strip()), "answer text must be nonempty")

    def to_dict(self) -> dict[str, Any]:
        return {"element": self.element, "answer": self.answer}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ClarificationAnswer":
        ans = cls(element=data["element"], answer=data["answer"])
        ans.validate()
        return ans


# ---------------------------------------------------------------------------
# Generation plan
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EditSpec:
    mode: EditMode
    target_expression: str
    mask: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"mode": self.mode.value, "target_expression": self.target_expression, "mask": self.mask}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EditSpec":
        return cls(
            mode=EditMode(data["mode"]),
            target_expression=data.get("target_expression", ""),
            mask=data.get("mask"),
        )


@dataclass(frozen=True)
class GenerationPlan:
    task_kind: TaskKind
    selected_model: str
    generating_prompt: str
    reference_content_image: str | None = None
    reference_style_image: str | None = None
    edit_spec: EditSpec | None = None
    reasoning: str = ""
    confidence: float = 0.0

    def validate(self) -> None:
        _require(bool(self.generating_prompt.strip()), "generating_prompt must be nonempty")
        _require(0.0 <= self.confidence <= 1.0, f"confidence {self.confidence} outside [0, 1]")
        if self.task_kind is TaskKind.EDIT:
            _require(self.edit_spec is not None, "EDIT plan requires an edit_spec")
            _require(self.reference_content_image is not None, "EDIT plan requires a reference content image")
        else:
            _require(self.edit_spec is None, "GENERATE plan must not carry an edit_spec")

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_kind": self.task_kind.value,
            "selected_model": self.selected_model,
            "generating_prompt": self.generating_prompt,
            "reference_content_image": self.reference_content_image,
            "reference_style_image": self.reference_style_image,
            "edit_spec": self.edit_spec.to_dict() if self.edit_spec else None,
            "reasoning": self.reasoning,
            "confidence": self.confidence,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "GenerationPlan":
        plan = cls(
            task_kind=TaskKind(data["task_kind"]),
            selected_model=data["selected_model"],
            generating_prompt=data["generating_prompt"],
            reference_content_image=data.get("reference_content_image"),
            reference_style_image=data.get("reference_style_image"),
            edit_spec=EditSpec.from_dict(data["edit_spec"]) if data.get("edit_spec") else None,
            reasoning=data.get("reasoning", ""),
            confidence=float(data.get("confidence", 0.0)),
        )
        plan.validate()
        return plan


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvaluationResult:
    aesthetic: dict[str, float]
    alignment: dict[str, float]
    missing_elements: tuple[str, ...]
    improvement_suggestions: str
    overall: float

    def sub_scores(self) -> list[float]:
        """All 10 sub-scores in canonical key order."""
        return [self.aesthetic[k] for k in AESTHETIC_KEYS] + [self.alignment[k] for k in ALIGNMENT_KEYS]

    def validate(self) -> None:
        _require(set(self.aesthetic) == set(AESTHETIC_KEYS), f"aesthetic keys must be exactly {AESTHETIC_KEYS}")
        _require(set(self.alignment) == set(ALIGNMENT_KEYS), f"alignment keys must be exactly {ALIGNMENT_KEYS}")
        for name, value in list(self.aesthetic.items()) + list(self.alignment.items()):
            _require(0.0 <= value <= 10.0, f"sub-score {name}={value} outside [0, 10]")
        _require(
            abs(self.overall - compute_overall(self.sub_scores())) <= SCORE_MEAN_TOLERANCE,
            "overall must equal the mean of the 10 sub-scores",
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "aesthetic": {k: self.aesthetic[k] for k in AESTHETIC_KEYS},
            "alignment": {k: self.alignment[k] for k in ALIGNMENT_KEYS},
            "missing_elements": list(self.missing_elements),
            "improvement_suggestions": self.improvement_suggestions,
            "overall": self.overall,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EvaluationResult":
        result = cls(
            aesthetic={k: float(v) for k, v in data["aesthetic"].items()},
            alignment={k: float(v) for k, v in data["alignment"].items()},
            missing_elements=tuple(data.get("missing_elements", [])),
            improvement_suggestions=data.get("improvement_suggestions", ""),
            overall=float(data["overall"]),
        )
        result.validate()
        return result


def compute_overall(sub_scores: list[float] | tuple[float, ...]) -> float:
    """Arithmetic mean of exactly 10 sub-scores.

    Uses an exactly-rounded sum so the result is permutation-invariant.
    """
    if len(sub_scores) != 10:
        raise ArityError(f"expected exactly 10 sub-scores, got {len(sub_scores)}")
    for value in sub_scores:
        _require(0.0 <= value <= 10.0, f"sub-score {value} outside [0, 10]")
    return math.fsum(sub_scores) / 10.0


# ---------------------------------------------------------------------------
# Session state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Turn:
    """One generate-then-evaluate cycle."""

    plan: GenerationPlan
    image: str
    evaluation: EvaluationResult
    user_feedback: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "plan": self.plan.to_dict(),
            "image": self.image,
            "evaluation": self.evaluation.to_dict(),
            "user_feedback": self.user_feedback,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Turn":
        return cls(
            plan=GenerationPlan.from_dict(data["plan"]),
            image=data["image"],
            evaluation=EvaluationResult.from_dict(data["evaluation"]),
            user_feedback=data.get("user_feedback"),
        )


@dataclass(frozen=True)
class SessionState:
    id: str
    request: GenerationRequest
    report: AnalysisReport | None = None
    turns: tuple[Turn, ...] = ()
    regen_count: int = 0
    status: SessionStatus = SessionStatus.INTERPRETING

    def validate(self) -> None:
        self.request.validate()
        if self.report is not None:
            finalized = self.status not in (
                SessionStatus.INTERPRETING,
                SessionStatus.AWAITING_CLARIFICATION,
            )
            self.report.validate(finalized=finalized)
        _require(self.regen_count == max(0, len(self.turns) - 1), "regen_count must equal max(0, |turns| - 1)")
        if self.status is SessionStatus.DONE:
            _require(len(self.turns) > 0, "DONE session must have at least one turn")

    @property
    def last_turn(self) -> Turn:
        if not self.turns:
            raise StateError("session has no turns yet")
        return self.turns[-1]

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "request": self.request.to_dict(),
            "report": self.report.to_dict() if self.report else None,
            "turns": [t.to_dict() for t in self.turns],
            "regen_count": self.regen_count,
            "status": self.status.value,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SessionState":
        state = cls(
            id=data["id"],
            request=GenerationRequest.from_dict(data["request"]),
            report=AnalysisReport.from_dict(data["report"]) if data.get("report") else None,
            turns=tuple(Turn.from_dict(t) for t in data.get("turns", [])),
            regen_count=int(data.get("regen_count", 0)),
            status=SessionStatus(data["status"]),
        )
        state.validate()
        return state


def new_session_id() -> str:
    """Opaque, lexicographically sortable, generation-time unique id."""
    return f"{time.time_ns():016x}-{secrets.token_hex(4)}"


def new_session(request: GenerationRequest, *, session_id: str | None = None) -> SessionState:
    """Create a fresh session in INTERPRETING with no turns."""
    request.validate()
    return SessionState(id=session_id or new_session_id(), request=request)


def should_continue(state: SessionState, threshold: float, max_regen: int) -> ContinueDecision:
    """Continue/stop decision of the regeneration loop.

    Pure function of (last overall, regen_count, threshold, max_regen).
    Equality with the threshold accepts; the budget is checked second so a
    passing score on the last allowed turn still counts as accepted.
    """
    if not state.turns:
        raise StateError("should_continue requires at least one evaluated turn")
    if state.last_turn.evaluation.overall >= threshold:
        return ContinueDecision.STOP_ACCEPTED
    if state.regen_count >= max_regen:
        return ContinueDecision.STOP_EXHAUSTED
    return ContinueDecision.CONTINUE


def record_turn(
    state: SessionState,
    plan: GenerationPlan,
    image: str,
    evaluation: EvaluationResult,
    feedback: str | None = None,
) -> SessionState:
    """Append a completed turn; the new state is EVALUATING."""
    if state.status not in (SessionStatus.GENERATING, SessionStatus.EVALUATING):
        raise StateError(f"cannot record a turn while {state.status.value}")
    plan.validate()
    evaluation.validate()
    turns = state.turns + (Turn(plan=plan, image=image, evaluation=evaluation, user_feedback=feedback),)
    return replace(state, turns=turns, regen_count=len(turns) - 1, status=SessionStatus.EVALUATING)


def attach_feedback(state: SessionState, text: str | None) -> SessionState:
    """Store user feedback on the most recent turn."""
    if not state.turns:
        raise StateError("no turn to attach feedback to")
    updated = replace(state.turns[-1], user_feedback=text)
    return replace(state, turns=state.turns[:-1] + (updated,))


def with_status(state: SessionState, status: SessionStatus) -> SessionState:
    return replace(state, status=status)


def with_report(state: SessionState, report: AnalysisReport) -> SessionState:
    return replace(state, report=report)
