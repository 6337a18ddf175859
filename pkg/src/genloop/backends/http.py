"""HTTP clients for the four backend roles.

Chat speaks the OpenAI-compatible chat-completions contract; the other three
speak a minimal JSON-in/PNG-out contract so any model server (or the bundled
mock server) can sit behind them:

    POST {url}/v1/chat/completions  {model, messages[]}          -> completion JSON
    POST {url}/generate             {prompt, width, height, seed} -> PNG
    POST {url}/edit                 {prompt, image_b64, mask_b64, mode} -> PNG
    POST {url}/segment              {image_b64, expression}       -> PNG | 404
"""

from __future__ import annotations

import base64
import os

import httpx

from ..errors import BackendError, ValidationError
from .base import (
    MAX_IMAGE_BYTES,
    ChatBackend,
    ChatMessage,
    EditBackend,
    EndpointDescriptor,
    GenerationBackend,
    SegmentationBackend,
)

DEFAULT_TIMEOUTS = {"chat": 120.0, "generator": 300.0, "editor": 180.0, "segmenter": 60.0}


def _check_image_size(data: bytes) -> None:
    if len(data) > MAX_IMAGE_BYTES:
        raise ValidationError(f"image payload exceeds {MAX_IMAGE_BYTES} bytes")


def _post(client: httpx.Client, backend_id: str, path: str, payload: dict) -> httpx.Response:
    try:
        response = client.post(path, json=payload)
    except httpx.HTTPError as exc:
        raise BackendError(f"{backend_id}: transport failure: {exc}", backend_id=backend_id) from exc
    if response.status_code >= 500:
        raise BackendError(
            f"{backend_id}: server error {response.status_code}",
            backend_id=backend_id,
            status=response.status_code,
        )
    return response


class HttpChatBackend(ChatBackend):
    """OpenAI-compatible chat completions with inline image parts."""

    def __init__(self, descriptor: EndpointDescriptor):
        self.id = descriptor.id
        self.model = descriptor.model or "gpt-4o-mini"
        key_env = descriptor.api_key_env or "T2I_COPILOT_API_KEY"
        headers = {}
        api_key = os.environ.get(key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(
            base_url=descriptor.url or "",
            headers=headers,
            timeout=descriptor.timeout_s or DEFAULT_TIMEOUTS["chat"],
        )

    def complete(self, messages: list[ChatMessage], images: list[bytes] = []) -> str:
        wire_messages: list[dict] = [dict(m) for m in messages]
        if images:
            # attach to the last user message as data-URL content parts
            for i in range(len(wire_messages) - 1, -1, -1):
                if wire_messages[i]["role"] == "user":
                    parts: list[dict] = [{"type": "text", "text": wire_messages[i]["content"]}]
                    for img in images:
                        _check_image_size(img)
                        b64 = base64.b64encode(img).decode("ascii")
                        parts.append(
                            {"type": "image_url", "image_url": {"url": f"data:image/png;base64,{b64}"}}
                        )
                    wire_messages[i] = {"role": "user", "content": parts}
                    break
        response = _post(
            self._client, self.id, "/v1/chat/completions", {"model": self.model, "messages": wire_messages}
        )
        if response.status_code != 200:
            raise BackendError(
                f"{self.id}: chat returned {response.status_code}", backend_id=self.id, status=response.status_code
            )
        body = response.json()
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"{self.id}: malformed completion envelope", backend_id=self.id) from exc


class _PngClient:
    def __init__(self, descriptor: EndpointDescriptor, role: str):
        self.id = descriptor.id
        self._client = httpx.Client(
            base_url=descriptor.url or "", timeout=descriptor.timeout_s or DEFAULT_TIMEOUTS[role]
        )

    def _expect_png(self, response: httpx.Response) -> bytes:
        if response.status_code != 200:
            raise BackendError(
                f"{self.id}: returned {response.status_code}", backend_id=self.id, status=response.status_code
            )
        _check_image_size(response.content)
        return response.content


class HttpGenerationBackend(_PngClient, GenerationBackend):
    def __init__(self, descriptor: EndpointDescriptor):
        super().__init__(descriptor, "generator")

    def generate(self, prompt: str, width: int, height: int, seed: int) -> bytes:
        if width <= 0 or height <= 0:
            raise ValidationError(f"dimensions must be positive, got {width}x{height}")
        response = _post(
            self._client, self.id, "/generate", {"prompt": prompt, "width": width, "height": height, "seed": seed}
        )
        return self._expect_png(response)


class HttpEditBackend(_PngClient, EditBackend):
    def __init__(self, descriptor: EndpointDescriptor):
        super().__init__(descriptor, "editor")

    def edit(self, prompt: str, image: bytes, mask: bytes, mode: str) -> bytes:
        _check_image_size(image)
        _check_image_size(mask)
        response = _post(
            self._client,
            self.id,
            "/edit",
            {
                "prompt": prompt,
                "image_b64": base64.b64encode(image).decode("ascii"),
                "mask_b64": base64.b64encode(mask).decode("ascii"),
                "mode": mode,
            },
        )
        return self._expect_png(response)


class HttpSegmentationBackend(_PngClient, SegmentationBackend):
    def __init__(self, descriptor: EndpointDescriptor):
        super().__init__(descriptor, "segmenter")

    def segment(self, image: bytes, expression: str) -> bytes | None:
        if not expression:
            raise ValidationError("expression must be nonempty")
        _check_image_size(image)
        response = _post(
            self._client,
            self.id,
            "/segment",
            {"image_b64": base64.b64encode(image).decode("ascii"), "expression": expression},
        )
        if response.status_code == 404:
            return None  # cascade-stage NotFound, not an error
        return self._expect_png(response)
