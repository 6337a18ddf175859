"""Shared fixtures: scripted backend suites and disposable session stores."""

from __future__ import annotations

import pytest

from genloop.backends import (
    BackendRegistry,
    BackendSuite,
    ChatGateway,
    ChatScenario,
    EndpointDescriptor,
    MockChatBackend,
    MockEditBackend,
    MockGenerationBackend,
    MockSegmentationBackend,
    RetryPolicy,
    TemplateStore,
)
from genloop.orchestrator import RunConfig, SessionRunner
from genloop.session import (
    AESTHETIC_KEYS,
    ALIGNMENT_KEYS,
    CREATIVITY_FILL_KEYS,
    AmbiguityResolution,
    AmbiguousElement,
    AnalysisReport,
    EvaluationResult,
    GenerationRequest,
    IdentifiedElements,
    MainSubject,
    ResolutionSource,
    compute_overall,
)


def make_registry(retry: RetryPolicy | None = None) -> BackendRegistry:
    return BackendRegistry(
        chat=EndpointDescriptor(id="mock-chat"),
        generator=EndpointDescriptor(id="mock-t2i", capabilities=("prompt_guided", "style", "text_render")),
        editor=EndpointDescriptor(id="mock-inpaint", capabilities=("local_edit", "add", "replace", "remove")),
        segmenter=EndpointDescriptor(id="mock-res", capabilities=("referring_expression",)),
        retry_policy=retry or RetryPolicy(backoff_ms=0),
    )


def make_suite(
    scenario: ChatScenario | None = None,
    *,
    retry: RetryPolicy | None = None,
    segmenter: MockSegmentationBackend | None = None,
    generator: MockGenerationBackend | None = None,
    editor: MockEditBackend | None = None,
) -> BackendSuite:
    registry = make_registry(retry)
    chat = MockChatBackend(scenario)
    return BackendSuite(
        registry=registry,
        chat=ChatGateway(chat, TemplateStore(), registry.retry_policy),
        generator=generator or MockGenerationBackend(),
        editor=editor or MockEditBackend(),
        segmenter=segmenter if segmenter is not None else MockSegmentationBackend(),
    )


def make_runner(
    tmp_path,
    scenario: ChatScenario | None = None,
    *,
    config: RunConfig | None = None,
    image_size: tuple[int, int] = (64, 64),
    **suite_kwargs,
) -> SessionRunner:
    suite = make_suite(scenario, **suite_kwargs)
    return SessionRunner(suite, tmp_path / "store", config, image_size=image_size)


def make_report(
    *,
    subjects: tuple[str, ...] = ("a red cube",),
    ambiguities: tuple[AmbiguousElement, ...] = (),
    detailed: str = "a red cube on a neutral background",
) -> AnalysisReport:
    return AnalysisReport(
        identified_elements=IdentifiedElements(
            main_subjects=tuple(MainSubject(name=s) for s in subjects), references=None
        ),
        creativity_fills={k: "" for k in CREATIVITY_FILL_KEYS},
        ambiguous_elements=ambiguities,
        detailed_prompt=detailed,
    )


def make_evaluation(
    value: float = 8.0,
    *,
    overrides: dict[str, float] | None = None,
    missing: tuple[str, ...] = (),
    suggestions: str = "",
) -> EvaluationResult:
    aesthetic = {k: value for k in AESTHETIC_KEYS}
    alignment = {k: value for k in ALIGNMENT_KEYS}
    for key, score in (overrides or {}).items():
        if key in aesthetic:
            aesthetic[key] = score
        else:
            alignment[key] = score
    subs = [aesthetic[k] for k in AESTHETIC_KEYS] + [alignment[k] for k in ALIGNMENT_KEYS]
    return EvaluationResult(
        aesthetic=aesthetic,
        alignment=alignment,
        missing_elements=missing,
        improvement_suggestions=suggestions,
        overall=compute_overall(subs),
    )


def resolved_ambiguity(element: str, answer: str, source=ResolutionSource.MODEL_FILL) -> AmbiguousElement:
    return AmbiguousElement(
        element=element,
        reason=f"{element} underspecified",
        clarification_questions=(f"What kind of {element}?",),
        resolution=AmbiguityResolution(source=source, answer=answer),
    )


@pytest.fixture
def basic_request() -> GenerationRequest:
    return GenerationRequest(prompt="a red cube")
