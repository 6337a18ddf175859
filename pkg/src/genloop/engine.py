"""Generation engine agent: task identification, input preparation, execution.

Ships with exactly two execution slots (a prompt-guided generator and a
reference-guided editor); the registry stays extensible but adding models
has to earn its keep. Region masks for edits come from a strict fallback
cascade:

    1. human canvas mask           (returned unchanged, zero backend calls)
    2. referring-expression segmentation on the target expression
    3. chat model bounding boxes -> rectangle mask
    4. chat model boxes from full prompt context, then segmentation
       retried with the full prompt

Stages are attempted in order, exactly once each, stopping at the first
success; only when all fail is RegionExtractionError raised so the caller
can fall back to the previous image or notify the user.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, replace
from typing import Callable

from .backends import BackendSuite, StructuredCallSpec
from .errors import BackendError, FormatError, RegionExtractionError, ValidationError
from .imaging import boxes_to_mask, mask_matches_image, png_dimensions
from .session import (
    AnalysisReport,
    EditMode,
    EditSpec,
    GenerationPlan,
    GenerationRequest,
    TaskKind,
)

logger = logging.getLogger(__name__)

DEFAULT_WIDTH = 1024
DEFAULT_HEIGHT = 1024


@dataclass(frozen=True)
class TaskContext:
    """Everything task identification and input preparation may draw on."""

    report: AnalysisReport
    request: GenerationRequest
    improvement_suggestions: str | None = None
    user_feedback: str | None = None
    previous_image: str | None = None
    forced_generate: bool = False
    canvas_mask: str | None = None  # user-drawn mask carried from feedback

    def validate(self) -> None:
        if self.improvement_suggestions is not None and self.previous_image is None:
            raise ValidationError("improvement suggestions imply a previous image (regeneration context)")

    @property
    def base_image(self) -> str | None:
        return self.previous_image or self.request.reference_image


@dataclass(frozen=True)
class RegionRequest:
    image: str
    expression: str
    canvas_mask: str | None = None

    def validate(self) -> None:
        if not self.expression and self.canvas_mask is None:
            raise ValidationError("expression must be nonempty unless a canvas mask is given")


@dataclass(frozen=True)
class ExecutionRecord:
    """Side facts of one backend execution, for the event log."""

    backend_id: str
    seed: int
    latency_ms: float


class GenerationEngine:
    def __init__(
        self,
        backends: BackendSuite,
        *,
        store_artifact: Callable[[bytes], str],
        load_artifact: Callable[[str], bytes],
        width: int = DEFAULT_WIDTH,
        height: int = DEFAULT_HEIGHT,
    ):
        self.backends = backends
        self.store_artifact = store_artifact
        self.load_artifact = load_artifact
        self.width = width
        self.height = height

    # -- task identification -------------------------------------------------

    def identify_task(self, ctx: TaskContext) -> tuple[TaskKind, str]:
        """Decide EDIT vs GENERATE.

        forced_generate always wins, and without any image an edit is
        impossible, so neither case spends a model call.
        """
        ctx.validate()
        if ctx.forced_generate:
            return TaskKind.GENERATE, "Evaluator recommended switching to the generation model."
        if ctx.base_image is None:
            return TaskKind.GENERATE, "No reference or previous image exists, so a new image is generated."
        raw = self.backends.chat.chat_structured(
            StructuredCallSpec(
                template_id="identify_task",
                variables={
                    "user_prompt": ctx.request.prompt,
                    "detailed_prompt": ctx.report.detailed_prompt,
                    "improvement_block": _optional_line("Improvement suggestions", ctx.improvement_suggestions),
                    "feedback_block": _optional_line("User feedback", ctx.user_feedback),
                    "image_note": "yes",
                    "mask_note": "yes" if ctx.canvas_mask else "no",
                    "capabilities_json": self._capabilities_json(),
                },
                expected_schema="task_decision",
            )
        )
        kind = TaskKind(raw["task"])
        if kind is TaskKind.EDIT and ctx.base_image is None:  # defense in depth
            kind = TaskKind.GENERATE
        return kind, raw.get("rationale", "")

    # -- input preparation ----------------------------------------------------

    def prepare_plan(self, ctx: TaskContext, task: TaskKind) -> GenerationPlan:
        ctx.validate()
        if task is TaskKind.EDIT:
            return self._prepare_edit_plan(ctx)
        return self._prepare_generate_plan(ctx)

    def _prepare_generate_plan(self, ctx: TaskContext) -> GenerationPlan:
        model_id = self.backends.registry.generator.id
        style_note = ""
        if ctx.request.reference_image and ctx.report.identified_elements.references:
            # no style-conditioned backend exists; reference style feeds the prompt only
            style_note = f"Style reference notes: {ctx.report.identified_elements.references}\n"
        raw = self.backends.chat.chat_structured(
            StructuredCallSpec(
                template_id="plan_generate",
                variables={
                    "model_id": model_id,
                    "capabilities_json": self._capabilities_json(),
                    "user_prompt": ctx.request.prompt,
                    "detailed_prompt": ctx.report.detailed_prompt,
                    "improvement_block": _optional_line("Improvement suggestions", ctx.improvement_suggestions),
                    "feedback_block": _optional_line("User feedback", ctx.user_feedback),
                    "style_note": style_note,
                },
                expected_schema="plan_generate",
            )
        )
        plan = GenerationPlan(
            task_kind=TaskKind.GENERATE,
            selected_model=self._coerce_model(raw.get("selected_model"), model_id),
            generating_prompt=raw["generating_prompt"],
            reference_content_image=ctx.base_image,
            reference_style_image=None,
            edit_spec=None,
            reasoning=raw.get("reasoning", ""),
            confidence=float(raw["confidence"]),
        )
        plan.validate()
        return plan

    def _prepare_edit_plan(self, ctx: TaskContext) -> GenerationPlan:
        model_id = self.backends.registry.editor.id
        raw = self.backends.chat.chat_structured(
            StructuredCallSpec(
                template_id="plan_edit",
                variables={
                    "model_id": model_id,
                    "capabilities_json": self._capabilities_json(),
                    "user_prompt": ctx.request.prompt,
                    "detailed_prompt": ctx.report.detailed_prompt,
                    "improvement_block": _optional_line("Improvement suggestions", ctx.improvement_suggestions),
                    "feedback_block": _optional_line("User feedback", ctx.user_feedback),
                },
                expected_schema="plan_edit",
            )
        )
        plan = GenerationPlan(
            task_kind=TaskKind.EDIT,
            selected_model=self._coerce_model(raw.get("selected_model"), model_id),
            generating_prompt=raw["generating_prompt"],
            reference_content_image=ctx.base_image,
            reference_style_image=None,
            edit_spec=EditSpec(
                mode=EditMode(raw["edit_mode"]),
                target_expression=raw["target_expression"],
                mask=ctx.canvas_mask,
            ),
            reasoning=raw.get("reasoning", ""),
            confidence=float(raw["confidence"]),
        )
        plan.validate()
        return plan

    def _coerce_model(self, proposed: str | None, slot_id: str) -> str:
        # selection is advisory; only the configured slot is executable
        if proposed and proposed != slot_id:
            logger.warning("model %r is not configured for this task; using %r", proposed, slot_id)
        return slot_id

    def _capabilities_json(self) -> str:
        reg = self.backends.registry
        return json.dumps(
            {
                reg.generator.id: list(reg.generator.capabilities),
                reg.editor.id: list(reg.editor.capabilities),
            },
            ensure_ascii=True,
        )

    # -- region cascade --------------------------------------------------------

    def extract_region(
        self,
        req: RegionRequest,
        *,
        full_prompt: str | None = None,
        attempt_log: list[int] | None = None,
    ) -> str:
        """Produce an edit mask via the strict four-stage cascade.

        Returns the mask artifact handle. `attempt_log`, when given, receives
        the stage numbers attempted in order. `full_prompt` feeds stage 4;
        it defaults to the bare expression.
        """
        req.validate()
        attempts = attempt_log if attempt_log is not None else []

        if req.canvas_mask is not None:
            attempts.append(1)
            return req.canvas_mask

        image = self.load_artifact(req.image)
        width, height = png_dimensions(image)
        context_prompt = full_prompt or req.expression

        attempts.append(2)
        mask = self._try_segment(image, req.expression)
        if mask is not None:
            return self.store_artifact(mask)

        attempts.append(3)
        mask = self._try_boxes("region_boxes", {"expression": req.expression}, image, width, height)
        if mask is not None:
            return self.store_artifact(mask)

        attempts.append(4)
        mask = self._try_boxes(
            "region_boxes_context",
            {"expression": req.expression, "full_prompt": context_prompt},
            image,
            width,
            height,
        )
        if mask is None:
            mask = self._try_segment(image, context_prompt)
        if mask is not None:
            return self.store_artifact(mask)

        raise RegionExtractionError(
            f"all region-extraction stages failed for {req.expression!r}", attempts=tuple(attempts)
        )

    def _try_segment(self, image: bytes, expression: str) -> bytes | None:
        try:
            mask = self.backends.segmenter.segment(image, expression)
        except BackendError as exc:
            logger.warning("segmentation failed: %s", exc)
            return None
        if mask is None:
            return None
        if not mask_matches_image(mask, image):
            logger.warning("segmenter returned mismatched mask dimensions; treating as stage failure")
            return None
        return mask

    def _try_boxes(self, template_id: str, variables: dict, image: bytes, width: int, height: int) -> bytes | None:
        try:
            raw = self.backends.chat.chat_structured(
                StructuredCallSpec(
                    template_id=template_id,
                    variables={**variables, "width": width, "height": height},
                    expected_schema="boxes",
                    attachments=(image,),
                )
            )
            boxes = [tuple(box) for box in raw["boxes"]]
            return boxes_to_mask(boxes, width, height)
        except (BackendError, FormatError, ValidationError) as exc:
            logger.warning("box-based mask stage failed: %s", exc)
            return None

    # -- model execution ---------------------------------------------------------

    def execute_plan(self, plan: GenerationPlan, *, seed: int) -> tuple[str, ExecutionRecord]:
        """Run the selected backend and persist the produced image."""
        plan.validate()
        start = time.perf_counter()
        if plan.task_kind is TaskKind.GENERATE:
            image = self.backends.generator.generate(plan.generating_prompt, self.width, self.height, seed)
            backend_id = self.backends.registry.generator.id
        else:
            if plan.edit_spec is None or plan.edit_spec.mask is None:
                raise ValidationError("EDIT plan reached execution without a resolved mask")
            base = self.load_artifact(plan.reference_content_image)
            mask = self.load_artifact(plan.edit_spec.mask)
            image = self.backends.editor.edit(plan.generating_prompt, base, mask, plan.edit_spec.mode.value)
            backend_id = self.backends.registry.editor.id
        latency_ms = (time.perf_counter() - start) * 1000.0
        handle = self.store_artifact(image)
        return handle, ExecutionRecord(backend_id=backend_id, seed=seed, latency_ms=latency_ms)

    def resolve_edit_mask(self, plan: GenerationPlan, ctx: TaskContext) -> GenerationPlan:
        """Fill in the edit mask via the cascade before execution."""
        if plan.task_kind is not TaskKind.EDIT or plan.edit_spec is None:
            return plan
        mask = self.extract_region(
            RegionRequest(
                image=plan.reference_content_image,
                expression=plan.edit_spec.target_expression,
                canvas_mask=plan.edit_spec.mask,
            ),
            full_prompt=plan.generating_prompt,
        )
        return replace(plan, edit_spec=replace(plan.edit_spec, mask=mask))


def _optional_line(label: str, value: str | None) -> str:
    return f"{label}: {value}\n" if value else ""
