"""Schema-validated chat calls with the format-retry policy.

A malformed or schema-violating reply triggers a re-ask that appends the
validation error to the conversation; transport failures burn a separate
budget. The two budgets never bleed into each other.
"""

from __future__ import annotations

import json
import logging
import re
import time
from typing import Any, Callable

import jsonschema

from ..errors import BackendError, FormatError, GenloopError, ValidationError
from ..schemas import SCHEMAS
from .base import MAX_IMAGE_BYTES, ChatBackend, ChatMessage, RetryPolicy, StructuredCallSpec, TemplateStore

logger = logging.getLogger(__name__)

_FENCE_RE = re.compile(r"```(?:json)?\s*([\s\S]*?)```", re.IGNORECASE)

# compiled once per schema: jsonschema.validate() re-checks the schema against
# the meta-schema on every call, which dominates the hot path otherwise
_VALIDATORS: dict[str, jsonschema.Draft202012Validator] = {}


def _validator_for(schema_id: str) -> jsonschema.Draft202012Validator:
    validator = _VALIDATORS.get(schema_id)
    if validator is None:
        validator = jsonschema.Draft202012Validator(SCHEMAS[schema_id])
        _VALIDATORS[schema_id] = validator
    return validator


def extract_json(text: str) -> Any:
    """Parse the JSON object in a chat reply, tolerating code fences and chatter."""
    candidate = text.strip()
    fenced = _FENCE_RE.search(candidate)
    if fenced:
        candidate = fenced.group(1).strip()
    try:
        return json.loads(candidate)
    except json.JSONDecodeError:
        start, end = candidate.find("{"), candidate.rfind("}")
        if start >= 0 and end > start:
            return json.loads(candidate[start : end + 1])
        raise


class ChatGateway:
    """Wraps a ChatBackend with template rendering and schema enforcement."""

    def __init__(
        self,
        backend: ChatBackend,
        templates: TemplateStore | None = None,
        retry: RetryPolicy | None = None,
        *,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.backend = backend
        self.templates = templates or TemplateStore()
        self.retry = retry or RetryPolicy()
        self._sleep = sleep
        self.calls_made = 0  # lifetime completion attempts, for call accounting

    def chat_structured(
        self,
        spec: StructuredCallSpec,
        *,
        semantic_check: Callable[[Any], str | None] | None = None,
        semantic_retries: int = 1,
        semantic_error: type[GenloopError] = FormatError,
    ) -> Any:
        """Run one structured call and return the schema-valid JSON value.

        `semantic_check` returns an error message for values that pass the
        schema but violate a domain rule (e.g. out-of-range scores); such
        values get their own re-ask budget and their own exception type.
        """
        if spec.expected_schema not in SCHEMAS:
            raise ValidationError(f"unknown schema id: {spec.expected_schema!r}")
        validator = _validator_for(spec.expected_schema)
        for image in spec.attachments:
            if len(image) > MAX_IMAGE_BYTES:
                raise ValidationError(f"attachment exceeds {MAX_IMAGE_BYTES} bytes")

        prompt = self.templates.render(spec.template_id, spec.variables)
        messages: list[ChatMessage] = [{"role": "user", "content": prompt}]
        format_budget = self.retry.format_retries
        semantic_budget = semantic_retries
        transport_budget = self.retry.transport_retries

        while True:
            raw = self._complete(messages, list(spec.attachments), transport_budget)
            transport_budget = 0  # budget is per operation, not per round
            try:
                value = extract_json(raw)
                validator.validate(value)
            except (json.JSONDecodeError, jsonschema.ValidationError) as exc:
                if format_budget <= 0:
                    raise FormatError(
                        f"{spec.template_id}: output failed validation after retries: {exc}"
                    ) from exc
                format_budget -= 1
                logger.warning("%s: malformed output, re-asking (%s)", spec.template_id, exc)
                messages.append({"role": "assistant", "content": raw[:4000]})
                messages.append(
                    {
                        "role": "user",
                        "content": (
                            "Your previous reply was invalid: "
                            f"{exc}. Respond again with only a corrected JSON object."
                        ),
                    }
                )
                continue

            if semantic_check is not None:
                problem = semantic_check(value)
                if problem is not None:
                    if semantic_budget <= 0:
                        raise semantic_error(f"{spec.template_id}: {problem}")
                    semantic_budget -= 1
                    logger.warning("%s: semantic violation, re-asking (%s)", spec.template_id, problem)
                    messages.append({"role": "assistant", "content": raw[:4000]})
                    messages.append(
                        {
                            "role": "user",
                            "content": f"Your previous reply was invalid: {problem}. "
                            "Respond again with only a corrected JSON object.",
                        }
                    )
                    continue
            return value

    def _complete(self, messages: list[ChatMessage], images: list[bytes], transport_budget: int) -> str:
        attempt = 0
        while True:
            try:
                self.calls_made += 1
                return self.backend.complete(messages, images)
            except BackendError:
                if attempt >= transport_budget:
                    raise
                attempt += 1
                if self.retry.backoff_ms > 0:
                    self._sleep(self.retry.backoff_ms * attempt / 1000.0)
