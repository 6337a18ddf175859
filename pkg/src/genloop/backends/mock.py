"""Deterministic mock backends.

Every mock is a pure function of (seed, inputs, scripted scenario), which
makes byte-exact golden tests possible. The chat mock dispatches on the
TASK_ID marker embedded in each rendered template and parses the labeled
variable lines back out of the prompt, so it behaves identically whether
driven in-process or through the mock HTTP server.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import BackendError, DimensionMismatchError, ValidationError
from ..imaging import decode_png, encode_png, png_dimensions
from ..session import AESTHETIC_KEYS, ALIGNMENT_KEYS, CREATIVITY_FILL_KEYS
from .base import ChatBackend, ChatMessage, EditBackend, GenerationBackend, SegmentationBackend, task_id_of


def _digest(*parts: Any) -> bytes:
    return hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()


def _line(prompt: str, label: str) -> str:
    m = re.search(rf"^{re.escape(label)}: (.*)$", prompt, re.MULTILINE)
    return m.group(1).strip() if m else ""


# ---------------------------------------------------------------------------
# Chat
# ---------------------------------------------------------------------------


@dataclass
class ChatScenario:
    """Script for the mock chat backend.

    scores entries are consumed one per evaluation call; each entry is either
    a single number (all ten sub-scores equal) or a dict with any of the keys
    {all, aesthetic, alignment, missing_elements, improvement_suggestions}.
    """

    main_subjects: list[dict[str, str]] | None = None
    fills: dict[str, str] = field(default_factory=dict)
    ambiguities: list[dict[str, Any]] = field(default_factory=list)
    scores: list[Any] = field(default_factory=lambda: [7.0, 8.5])
    confidence: float = 0.95
    edit_target: str | None = None
    boxes: list[list[int]] | None = None
    context_boxes: list[list[int]] | None = None
    malformed: dict[str, int] = field(default_factory=dict)
    fail_transport: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ChatScenario":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})


@dataclass
class ChatCall:
    task_id: str
    prompt: str
    image_count: int


class MockChatBackend(ChatBackend):
    """Scripted vision-chat mock with per-task deterministic handlers."""

    id = "mock-chat"

    def __init__(self, scenario: ChatScenario | None = None):
        self.scenario = scenario or ChatScenario()
        self.calls: list[ChatCall] = []
        self._eval_calls = 0

    def complete(self, messages: list[ChatMessage], images: list[bytes] = []) -> str:
        full_prompt = messages[0]["content"]
        task = task_id_of(full_prompt) or "unknown"
        self.calls.append(ChatCall(task_id=task, prompt=full_prompt, image_count=len(images)))

        remaining_failures = self.scenario.fail_transport.get(task, 0)
        if remaining_failures > 0:
            self.scenario.fail_transport[task] = remaining_failures - 1
            raise BackendError(f"injected transport failure for {task}", backend_id=self.id, status=503)

        remaining_malformed = self.scenario.malformed.get(task, 0)
        if remaining_malformed > 0:
            self.scenario.malformed[task] = remaining_malformed - 1
            return "sorry, here is something that is { definitely not valid json"

        handler = getattr(self, f"_{task}", None)
        if handler is None:
            raise BackendError(f"mock chat has no handler for task {task!r}", backend_id=self.id)
        return json.dumps(handler(full_prompt, images))

    # -- handlers ----------------------------------------------------------

    def _interpret(self, prompt: str, images: list[bytes]) -> dict:
        user_prompt = _line(prompt, "User prompt")
        level = _line(prompt, "Creativity level")
        if self.scenario.main_subjects is not None:
            subjects = self.scenario.main_subjects
        else:
            subjects = [{"name": user_prompt[:60].strip() or "scene", "attributes": ""}]
        fills = {}
        for key in CREATIVITY_FILL_KEYS:
            if key in self.scenario.fills:
                fills[key] = self.scenario.fills[key]
            elif level == "LOW":
                fills[key] = ""
            else:
                fills[key] = f"{key.replace('_', ' ')} chosen to suit: {user_prompt[:40]}"
        ambiguities = [
            {
                "element": a["element"],
                "reason": a.get("reason", f"{a['element']} is not specified"),
                "clarification_questions": list(a.get("questions", [f"What kind of {a['element']}?"])),
            }
            for a in self.scenario.ambiguities
        ]
        references = "reference image noted" if images else None
        return {
            "main_subjects": subjects,
            "references": references,
            "creativity_fills": fills,
            "ambiguous_elements": ambiguities,
        }

    def _resolve(self, prompt: str, images: list[bytes]) -> dict:
        elements = json.loads(_line(prompt, "Unresolved elements (JSON)"))
        by_element = {a["element"]: a for a in self.scenario.ambiguities}
        resolutions = []
        for el in elements:
            name = el["element"]
            scripted = by_element.get(name, {}).get("fill")
            resolutions.append({"element": name, "answer": scripted or f"assume a typical {name}"})
        return {"resolutions": resolutions}

    def _finalize(self, prompt: str, images: list[bytes]) -> dict:
        user_prompt = _line(prompt, "User prompt")
        level = _line(prompt, "Creativity level")
        analysis = json.loads(_line(prompt, "Analysis (JSON)"))
        answers = json.loads(_line(prompt, "Clarified ambiguities (JSON)"))
        parts = [user_prompt]
        parts += [a["answer"] for a in answers]
        if level != "LOW":
            parts += [v for v in analysis.get("creativity_fills", {}).values() if v]
        return {"detailed_prompt": ". ".join(p.rstrip(".") for p in parts if p) + "."}

    def _identify_task(self, prompt: str, images: list[bytes]) -> dict:
        has_image = _line(prompt, "Available image") == "yes"
        has_mask = _line(prompt, "User-drawn region mask") == "yes"
        hints = " ".join([_line(prompt, "Improvement suggestions"), _line(prompt, "User feedback")]).lower()
        local_change = bool(re.search(r"\b(remove|add|replace|erase|insert)\b", hints))
        if has_image and (has_mask or local_change):
            return {"task": "EDIT", "rationale": "A localized object change on the existing image fits the editing backend."}
        return {
            "task": "GENERATE",
            "rationale": "The request suggests a complete new image creation rather than localized edits.",
        }

    def _plan_generate(self, prompt: str, images: list[bytes]) -> dict:
        detailed = _line(prompt, "Detailed prompt") or _line(prompt, "User prompt")
        suggestions = _line(prompt, "Improvement suggestions")
        feedback = _line(prompt, "User feedback")
        text = detailed
        if suggestions:
            text += f" Revision goals: {suggestions}"
        if feedback:
            text += f" User feedback to honor: {feedback}"
        return {
            "generating_prompt": text,
            "selected_model": _line(prompt, "Model id"),
            "reasoning": "The request suggests a complete new image creation rather than localized edits.",
            "confidence": self.scenario.confidence,
        }

    def _plan_edit(self, prompt: str, images: list[bytes]) -> dict:
        suggestions = _line(prompt, "Improvement suggestions")
        feedback = _line(prompt, "User feedback")
        hints = f"{suggestions} {feedback}".strip().lower()
        mode, target = "REPLACE", self.scenario.edit_target or "region of interest"
        m = re.search(r"\bremove (?:the |a |an )?([a-z]+)", hints)
        if m:
            mode, target = "REMOVE", m.group(1)
        else:
            m = re.search(r"\badd (?:the |a |an )?([a-z]+)", hints)
            if m:
                mode, target = "ADD", m.group(1)
            else:
                m = re.search(r"\breplace (?:the |a |an )?([a-z]+)", hints)
                if m:
                    mode, target = "REPLACE", m.group(1)
        if self.scenario.edit_target:
            target = self.scenario.edit_target
        text = f"{mode.lower()} {target}"
        if hints:
            text += f" per: {hints}"
        return {
            "generating_prompt": text,
            "selected_model": _line(prompt, "Model id"),
            "edit_mode": mode,
            "target_expression": target,
            "reasoning": "The change is local to one object, so the editing backend applies.",
            "confidence": self.scenario.confidence,
        }

    def _evaluate(self, prompt: str, images: list[bytes]) -> dict:
        entry = self.scenario.scores[min(self._eval_calls, len(self.scenario.scores) - 1)]
        self._eval_calls += 1
        if isinstance(entry, (int, float)):
            entry = {"all": float(entry)}
        base = float(entry.get("all", 8.0))
        aesthetic = {k: base for k in AESTHETIC_KEYS}
        alignment = {k: base for k in ALIGNMENT_KEYS}
        aesthetic.update(entry.get("aesthetic", {}))
        alignment.update(entry.get("alignment", {}))
        missing = list(entry.get("missing_elements", []))
        suggestions = entry.get("improvement_suggestions")
        if suggestions is None:
            weak = min(list(aesthetic.values()) + list(alignment.values()))
            suggestions = "" if weak >= 8.0 and not missing else "Strengthen the weakest aspects of the image."
        return {
            "aesthetic": aesthetic,
            "alignment": alignment,
            "missing_elements": missing,
            "improvement_suggestions": suggestions,
        }

    def _region_boxes(self, prompt: str, images: list[bytes]) -> dict:
        return {"boxes": self.scenario.boxes or []}

    def _region_boxes_context(self, prompt: str, images: list[bytes]) -> dict:
        return {"boxes": self.scenario.context_boxes or []}


# ---------------------------------------------------------------------------
# Generator / editor / segmenter
# ---------------------------------------------------------------------------


class MockGenerationBackend(GenerationBackend):
    """Seeded texture generator: identical inputs yield identical PNG bytes."""

    id = "mock-t2i"

    def __init__(self, *, fail_times: int = 0, fail_status: int = 503):
        self.calls: list[dict[str, Any]] = []
        self.fail_times = fail_times
        self.fail_status = fail_status

    def generate(self, prompt: str, width: int, height: int, seed: int) -> bytes:
        if width <= 0 or height <= 0:
            raise ValidationError(f"dimensions must be positive, got {width}x{height}")
        self.calls.append({"prompt": prompt, "width": width, "height": height, "seed": seed})
        if self.fail_times > 0:
            self.fail_times -= 1
            raise BackendError("injected generator failure", backend_id=self.id, status=self.fail_status)
        digest = _digest("generate", seed, prompt, width, height)
        base = np.frombuffer(digest[:3], dtype=np.uint8)
        pixels = np.tile(base, (height, width, 1))
        # stamp a digest-derived block so different prompts are visually distinct
        block = np.frombuffer((digest * ((192 // len(digest)) + 1))[:64 * 3], dtype=np.uint8).reshape(8, 8, 3)
        pixels[: min(8, height), : min(8, width)] = block[: min(8, height), : min(8, width)]
        return encode_png(pixels)


class MockEditBackend(EditBackend):
    """Inverts the masked region; pixels outside the mask stay untouched."""

    id = "mock-inpaint"

    def __init__(self, *, fail_times: int = 0):
        self.calls: list[dict[str, Any]] = []
        self.fail_times = fail_times

    def edit(self, prompt: str, image: bytes, mask: bytes, mode: str) -> bytes:
        if png_dimensions(image) != png_dimensions(mask):
            raise DimensionMismatchError(
                f"mask {png_dimensions(mask)} does not match image {png_dimensions(image)}"
            )
        self.calls.append({"prompt": prompt, "mode": mode})
        if self.fail_times > 0:
            self.fail_times -= 1
            raise BackendError("injected editor failure", backend_id=self.id, status=503)
        mask_px = decode_png(mask)
        if not mask_px.any():
            return image  # nothing to edit: hand back the exact input bytes
        pixels = decode_png(image).copy()
        region = mask_px > 0
        pixels[region] = 255 - pixels[region]  # complement guarantees a visible change
        return encode_png(pixels)


class MockSegmentationBackend(SegmentationBackend):
    """Expression-table segmenter with fault-injection knobs."""

    id = "mock-res"

    def __init__(
        self,
        responses: dict[str, bytes | None] | None = None,
        *,
        default: str = "auto",  # "auto" synthesizes a center mask, "notfound" returns None
        bad_dims: bool = False,
        fail_transport: int = 0,
    ):
        self.responses = responses or {}
        self.default = default
        self.bad_dims = bad_dims
        self.fail_transport = fail_transport
        self.calls: list[str] = []

    def segment(self, image: bytes, expression: str) -> bytes | None:
        if not expression:
            raise ValidationError("expression must be nonempty")
        self.calls.append(expression)
        if self.fail_transport > 0:
            self.fail_transport -= 1
            raise BackendError("injected segmenter failure", backend_id=self.id, status=503)
        if expression in self.responses:
            return self.responses[expression]
        if self.default == "notfound":
            return None
        width, height = png_dimensions(image)
        if self.bad_dims:
            width, height = max(1, width // 2), max(1, height // 2)
        mask = np.zeros((height, width), dtype=np.uint8)
        mask[height // 4 : max(height // 4 + 1, 3 * height // 4), width // 4 : max(width // 4 + 1, 3 * width // 4)] = 255
        return encode_png(mask)
