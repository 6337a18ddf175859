"""Input interpreter agent: request -> finalized analysis report.

Three separate model interactions (understand, resolve, summarize) rather
than one mega-prompt: smaller schemas fail format validation less often.
Human clarification answers always win over model fills, and elements a
human already answered never reach the model again.
"""

from __future__ import annotations

import json
import re
from dataclasses import replace
from typing import Callable

from .backends import ChatGateway, StructuredCallSpec
from .errors import StateError, UnknownElementError
from .session import (
    CREATIVITY_FILL_KEYS,
    AmbiguityResolution,
    AmbiguousElement,
    AnalysisReport,
    ClarificationAnswer,
    CreativityLevel,
    DraftAnalysis,
    GenerationRequest,
    IdentifiedElements,
    MainSubject,
    ResolutionSource,
)

# Caps are artifact policy, not sourced from any reference; both configurable.
DEFAULT_MAX_AMBIGUITIES = 8
DEFAULT_MAX_QUESTIONS = 3


def literal_restatement(prompt: str, element: str) -> str:
    """Restate an ambiguous element in the user's own words.

    Returns the element as it appears in the prompt, including an
    immediately preceding article, so "plate" in "...on a plate" comes back
    as "a plate". Falls back to the bare element name when the prompt does
    not contain it.
    """
    pattern = re.compile(rf"(?:\b(?:a|an|the)\s+)?{re.escape(element)}", re.IGNORECASE)
    match = pattern.search(prompt)
    return match.group(0) if match else element


class InputInterpreter:
    def __init__(
        self,
        chat: ChatGateway,
        *,
        max_ambiguities: int = DEFAULT_MAX_AMBIGUITIES,
        max_questions: int = DEFAULT_MAX_QUESTIONS,
        load_image: Callable[[str], bytes] | None = None,
    ):
        self.chat = chat
        self.max_ambiguities = max_ambiguities
        self.max_questions = max_questions
        self._load_image = load_image

    # -- understand ---------------------------------------------------------

    def analyze_input(self, request: GenerationRequest) -> DraftAnalysis:
        """Extract subjects, fill the eight aspects, detect ambiguities."""
        request.validate()
        attachments: tuple[bytes, ...] = ()
        reference_note = "none"
        if request.reference_image and self._load_image:
            attachments = (self._load_image(request.reference_image),)
            reference_note = "attached below"
        raw = self.chat.chat_structured(
            StructuredCallSpec(
                template_id="interpret",
                variables={
                    "user_prompt": request.prompt,
                    "creativity_level": request.creativity_level.value,
                    "reference_note": reference_note,
                    "max_ambiguities": self.max_ambiguities,
                    "max_questions": self.max_questions,
                },
                expected_schema="draft_analysis",
                attachments=attachments,
            )
        )
        ambiguities = []
        for item in raw["ambiguous_elements"][: self.max_ambiguities]:
            ambiguities.append(
                AmbiguousElement(
                    element=item["element"],
                    reason=item.get("reason", ""),
                    clarification_questions=tuple(item["clarification_questions"][: self.max_questions]),
                    resolution=AmbiguityResolution(),
                )
            )
        draft = DraftAnalysis(
            identified_elements=IdentifiedElements(
                main_subjects=tuple(
                    MainSubject(name=s["name"], attributes=s.get("attributes", "")) for s in raw["main_subjects"]
                ),
                references=raw.get("references"),
            ),
            creativity_fills=_complete_fills(raw.get("creativity_fills", {})),
            ambiguous_elements=tuple(ambiguities),
            detailed_prompt="",
        )
        draft.validate()
        return draft

    # -- resolve ------------------------------------------------------------

    def resolve_ambiguities(
        self,
        draft: DraftAnalysis,
        request: GenerationRequest,
        answers: list[ClarificationAnswer],
    ) -> DraftAnalysis:
        """Resolve every PENDING ambiguity.

        Precedence: human answer, then the creativity rule (model fill at
        MEDIUM/HIGH, literal restatement of the user's words at LOW).
        Elements a human answered are excluded from the model call; when
        nothing is left the model is not called at all.
        """
        pending_names = {el.element for el in draft.ambiguous_elements if el.pending}
        by_element: dict[str, str] = {}
        for answer in answers:
            answer.validate()
            if answer.element not in pending_names:
                raise UnknownElementError(f"no pending ambiguous element named {answer.element!r}")
            by_element[answer.element] = answer.answer

        unanswered = [el for el in draft.ambiguous_elements if el.pending and el.element not in by_element]
        model_fills: dict[str, str] = {}
        if unanswered and request.creativity_level is not CreativityLevel.LOW:
            elements_json = json.dumps(
                [{"element": el.element, "reason": el.reason} for el in unanswered], ensure_ascii=True
            )
            missing = {el.element for el in unanswered}

            def _covers_all(value: dict) -> str | None:
                got = {r["element"] for r in value["resolutions"]}
                lacking = missing - got
                return f"missing resolutions for: {sorted(lacking)}" if lacking else None

            raw = self.chat.chat_structured(
                StructuredCallSpec(
                    template_id="resolve",
                    variables={
                        "user_prompt": request.prompt,
                        "creativity_level": request.creativity_level.value,
                        "elements_json": elements_json,
                    },
                    expected_schema="resolutions",
                ),
                semantic_check=_covers_all,
            )
            model_fills = {r["element"]: r["answer"] for r in raw["resolutions"]}

        resolved = []
        for el in draft.ambiguous_elements:
            if not el.pending:
                resolved.append(el)
            elif el.element in by_element:
                resolved.append(
                    replace(el, resolution=AmbiguityResolution(ResolutionSource.HUMAN, by_element[el.element]))
                )
            elif request.creativity_level is CreativityLevel.LOW:
                resolved.append(
                    replace(
                        el,
                        resolution=AmbiguityResolution(
                            ResolutionSource.LITERAL, literal_restatement(request.prompt, el.element)
                        ),
                    )
                )
            else:
                resolved.append(
                    replace(el, resolution=AmbiguityResolution(ResolutionSource.MODEL_FILL, model_fills[el.element]))
                )
        out = replace(draft, ambiguous_elements=tuple(resolved))
        out.validate()
        return out

    # -- summarize ----------------------------------------------------------

    def finalize_report(self, resolved: DraftAnalysis, request: GenerationRequest) -> AnalysisReport:
        """Aggregate the resolved analysis into the final detailed prompt."""
        pending = resolved.pending_elements
        if pending:
            raise StateError(f"cannot finalize with PENDING ambiguities: {[el.element for el in pending]}")
        analysis_json = json.dumps(
            {
                "identified_elements": resolved.identified_elements.to_dict(),
                "creativity_fills": resolved.creativity_fills,
            },
            ensure_ascii=True,
        )
        answers_json = json.dumps(
            [
                {"element": el.element, "answer": el.resolution.answer, "source": el.resolution.source.value}
                for el in resolved.ambiguous_elements
            ],
            ensure_ascii=True,
        )

        subject_names = [s.name for s in resolved.identified_elements.main_subjects]
        semantic_check = None
        if request.creativity_level is CreativityLevel.LOW:

            def semantic_check(value: dict) -> str | None:  # noqa: F811 - LOW-only guard
                text = value["detailed_prompt"].lower()
                absent = [n for n in subject_names if n.lower() not in text]
                return f"detailed_prompt must mention every main subject; missing {absent}" if absent else None

        raw = self.chat.chat_structured(
            StructuredCallSpec(
                template_id="finalize",
                variables={
                    "user_prompt": request.prompt,
                    "creativity_level": request.creativity_level.value,
                    "analysis_json": analysis_json,
                    "answers_json": answers_json,
                },
                expected_schema="detailed_prompt",
            ),
            semantic_check=semantic_check,
        )
        report = replace(resolved, detailed_prompt=raw["detailed_prompt"])
        report.validate(finalized=True)
        return report


def _complete_fills(raw_fills: dict[str, str]) -> dict[str, str]:
    return {k: str(raw_fills.get(k, "")) for k in CREATIVITY_FILL_KEYS}
