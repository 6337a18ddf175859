"""Backend clients, deterministic mocks, and the structured-call gateway."""

from __future__ import annotations

from dataclasses import dataclass

from .base import (
    BackendRegistry,
    ChatBackend,
    EditBackend,
    EndpointDescriptor,
    GenerationBackend,
    RetryPolicy,
    SegmentationBackend,
    StructuredCallSpec,
    TemplateStore,
    task_id_of,
)
from .http import HttpChatBackend, HttpEditBackend, HttpGenerationBackend, HttpSegmentationBackend
from .mock import ChatScenario, MockChatBackend, MockEditBackend, MockGenerationBackend, MockSegmentationBackend
from .structured import ChatGateway, extract_json


@dataclass
class BackendSuite:
    """Everything the agents need to talk to the outside world."""

    registry: BackendRegistry
    chat: ChatGateway
    generator: GenerationBackend
    editor: EditBackend
    segmenter: SegmentationBackend


def build_suite(
    registry: BackendRegistry,
    *,
    chat_scenario: ChatScenario | None = None,
    templates: TemplateStore | None = None,
) -> BackendSuite:
    """Instantiate concrete clients for a registry (mock or http per slot)."""
    registry.validate()

    if registry.chat.mode == "http":
        chat_backend: ChatBackend = HttpChatBackend(registry.chat)
    else:
        chat_backend = MockChatBackend(chat_scenario)

    if registry.generator.mode == "http":
        generator: GenerationBackend = HttpGenerationBackend(registry.generator)
    else:
        generator = MockGenerationBackend()
        generator.id = registry.generator.id

    if registry.editor.mode == "http":
        editor: EditBackend = HttpEditBackend(registry.editor)
    else:
        editor = MockEditBackend()
        editor.id = registry.editor.id

    if registry.segmenter.mode == "http":
        segmenter: SegmentationBackend = HttpSegmentationBackend(registry.segmenter)
    else:
        segmenter = MockSegmentationBackend()
        segmenter.id = registry.segmenter.id

    gateway = ChatGateway(chat_backend, templates or TemplateStore(), registry.retry_policy)
    return BackendSuite(registry=registry, chat=gateway, generator=generator, editor=editor, segmenter=segmenter)


__all__ = [
    "BackendRegistry",
    "BackendSuite",
    "ChatBackend",
    "ChatGateway",
    "ChatScenario",
    "EditBackend",
    "EndpointDescriptor",
    "GenerationBackend",
    "HttpChatBackend",
    "HttpEditBackend",
    "HttpGenerationBackend",
    "HttpSegmentationBackend",
    "MockChatBackend",
    "MockEditBackend",
    "MockGenerationBackend",
    "MockSegmentationBackend",
    "RetryPolicy",
    "SegmentationBackend",
    "StructuredCallSpec",
    "TemplateStore",
    "build_suite",
    "extract_json",
    "task_id_of",
]
