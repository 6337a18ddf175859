"""Backend abstractions: the four external model roles and their registry."""

from __future__ import annotations

import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

from ..errors import ValidationError

MAX_IMAGE_BYTES = 16 * 1024 * 1024  # payload guard, enforced before transport

ChatMessage = dict[str, str]  # {"role": "system"|"user"|"assistant", "content": str}


class ChatBackend(ABC):
    """Vision-capable chat model (single-shot completions, no streaming)."""

    id: str = "chat"

    @abstractmethod
    def complete(self, messages: list[ChatMessage], images: list[bytes] = []) -> str:
        """Return the raw assistant text for the conversation."""


class GenerationBackend(ABC):
    """Prompt-guided text-to-image model."""

    id: str = "generator"

    @abstractmethod
    def generate(self, prompt: str, width: int, height: int, seed: int) -> bytes:
        """Return PNG bytes of the requested dimensions."""


class EditBackend(ABC):
    """Reference-guided editing / inpainting model."""

    id: str = "editor"

    @abstractmethod
    def edit(self, prompt: str, image: bytes, mask: bytes, mode: str) -> bytes:
        """Return PNG bytes with the masked region changed per mode."""


class SegmentationBackend(ABC):
    """Referring-expression segmentation model."""

    id: str = "segmenter"

    @abstractmethod
    def segment(self, image: bytes, expression: str) -> bytes | None:
        """Return a single-channel mask PNG, or None when the region is not found."""


@dataclass(frozen=True)
class RetryPolicy:
    """Orthogonal budgets: format re-asks never consume transport retries."""

    format_retries: int = 1
    transport_retries: int = 2
    backoff_ms: int = 250


@dataclass(frozen=True)
class EndpointDescriptor:
    id: str
    mode: str = "mock"  # "mock" | "http"
    url: str | None = None
    capabilities: tuple[str, ...] = ()
    model: str | None = None
    api_key_env: str | None = None
    timeout_s: float | None = None


@dataclass(frozen=True)
class BackendRegistry:
    """Descriptors for the four required backend slots."""

    chat: EndpointDescriptor
    generator: EndpointDescriptor
    editor: EndpointDescriptor
    segmenter: EndpointDescriptor
    retry_policy: RetryPolicy = field(default_factory=RetryPolicy)

    def validate(self) -> None:
        for slot in ("chat", "generator", "editor", "segmenter"):
            desc = getattr(self, slot)
            if desc is None:
                raise ValidationError(f"backend slot {slot!r} is not configured")
            if desc.mode == "http" and not desc.url:
                raise ValidationError(f"backend slot {slot!r} is http mode but has no url")


@dataclass(frozen=True)
class StructuredCallSpec:
    """One schema-validated chat interaction."""

    template_id: str
    variables: dict[str, Any]
    expected_schema: str
    attachments: tuple[bytes, ...] = ()


class TemplateStore:
    """Loads prompt templates shipped with the package and renders placeholders.

    Placeholders are {name} tokens; only the names present in the variables
    mapping are substituted, so literal JSON braces in template bodies
    survive rendering. Loaded texts are cached process-wide.
    """

    _shared_cache: dict[tuple[str, str], str] = {}

    def __init__(self, package: str = "genloop.templates"):
        self._package = package

    def load(self, template_id: str) -> str:
        key = (self._package, template_id)
        if key not in self._shared_cache:
            try:
                text = resources.files(self._package).joinpath(f"{template_id}.txt").read_text("utf-8")
            except FileNotFoundError:
                raise ValidationError(f"unknown prompt template: {template_id!r}") from None
            self._shared_cache[key] = text
        return self._shared_cache[key]

    def render(self, template_id: str, variables: dict[str, Any]) -> str:
        text = self.load(template_id)
        for key, value in variables.items():
            text = text.replace("{" + key + "}", str(value))
        return text


_TASK_ID_RE = re.compile(r"^TASK_ID:\s*(\S+)", re.MULTILINE)


def task_id_of(prompt: str) -> str | None:
    """Extract the TASK_ID marker a rendered template carries.

    The marker lets scripted chat backends (in-process or behind the HTTP
    contract) dispatch deterministically without side channels.
    """
    m = _TASK_ID_RE.search(prompt)
    return m.group(1) if m else None
