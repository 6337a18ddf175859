"""Offline mock server speaking the exact backend HTTP contracts.

Lets the HTTP clients (and anything else that talks the wire format) be
exercised without model weights or network access.
"""

from __future__ import annotations

import base64

from fastapi import FastAPI, Response
from pydantic import BaseModel

from .mock import ChatScenario, MockChatBackend, MockEditBackend, MockGenerationBackend, MockSegmentationBackend


class ChatCompletionRequest(BaseModel):
    model: str = "mock"
    messages: list[dict]


class GenerateRequest(BaseModel):
    prompt: str
    width: int = 1024
    height: int = 1024
    seed: int = 0


class EditRequest(BaseModel):
    prompt: str
    image_b64: str
    mask_b64: str
    mode: str


class SegmentRequest(BaseModel):
    image_b64: str
    expression: str


def create_mock_backend_app(scenario: ChatScenario | None = None) -> FastAPI:
    app = FastAPI(title="genloop mock backends")
    chat = MockChatBackend(scenario)
    generator = MockGenerationBackend()
    editor = MockEditBackend()
    segmenter = MockSegmentationBackend()

    @app.post("/v1/chat/completions")
    def chat_completions(body: ChatCompletionRequest):
        messages = []
        images: list[bytes] = []
        for message in body.messages:
            content = message.get("content", "")
            if isinstance(content, list):  # multimodal content parts
                text_parts = []
                for part in content:
                    if part.get("type") == "text":
                        text_parts.append(part.get("text", ""))
                    elif part.get("type") == "image_url":
                        url = part.get("image_url", {}).get("url", "")
                        if "," in url:
                            images.append(base64.b64decode(url.split(",", 1)[1]))
                content = "\n".join(text_parts)
            messages.append({"role": message.get("role", "user"), "content": content})
        text = chat.complete(messages, images)
        return {
            "id": "mock-completion",
            "object": "chat.completion",
            "model": body.model,
            "choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}],
        }

    @app.post("/generate")
    def generate(body: GenerateRequest):
        png = generator.generate(body.prompt, body.width, body.height, body.seed)
        return Response(content=png, media_type="image/png")

    @app.post("/edit")
    def edit(body: EditRequest):
        png = editor.edit(body.prompt, base64.b64decode(body.image_b64), base64.b64decode(body.mask_b64), body.mode)
        return Response(content=png, media_type="image/png")

    @app.post("/segment")
    def segment(body: SegmentRequest):
        mask = segmenter.segment(base64.b64decode(body.image_b64), body.expression)
        if mask is None:
            return Response(status_code=404)
        return Response(content=mask, media_type="image/png")

    return app
