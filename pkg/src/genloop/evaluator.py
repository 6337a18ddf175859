"""Quality evaluator agent: scores images and renders the accept/regenerate verdict.

All judgment is delegated to the vision chat backend; the engine only does
arithmetic. The model's own overall number is discarded and recomputed
locally as the unweighted mean of the 10 sub-scores, for determinism.
Out-of-range sub-scores get one corrective re-ask before ScoreRangeError.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Callable

from .backends import ChatGateway, StructuredCallSpec
from .errors import ScoreRangeError
from .session import (
    AESTHETIC_KEYS,
    ALIGNMENT_KEYS,
    AnalysisReport,
    EvaluationResult,
    GenerationRequest,
    compute_overall,
)

DEFAULT_THRESHOLD = 8.0

# Phrase the evaluator template tells the model to use when the editing
# backend cannot achieve the requested change.
_SWITCH_RE = re.compile(r"switch(?:ing)?\s+to\s+the\s+generation\s+model", re.IGNORECASE)


def recommends_generation(improvement_suggestions: str) -> bool:
    """Whether the suggestion text asks to abandon the editor."""
    return bool(_SWITCH_RE.search(improvement_suggestions))


@dataclass(frozen=True)
class Verdict:
    decision: str  # "ACCEPT" | "REGENERATE"
    overall: float
    threshold: float

    ACCEPT = "ACCEPT"
    REGENERATE = "REGENERATE"

    def to_dict(self) -> dict:
        return {"decision": self.decision, "overall": self.overall, "threshold": self.threshold}


def render_verdict(
    evaluation: EvaluationResult, threshold: float, weights: dict[str, float] | None = None
) -> Verdict:
    """ACCEPT iff overall >= threshold (ties accept).

    Optional per-sub-field weights gate on a weighted mean instead; the
    stored EvaluationResult.overall is always the unweighted mean.
    """
    overall = evaluation.overall
    if weights:
        merged = {**evaluation.aesthetic, **evaluation.alignment}
        total = sum(weights.get(k, 1.0) for k in merged)
        overall = sum(v * weights.get(k, 1.0) for k, v in merged.items()) / total
    decision = Verdict.ACCEPT if overall >= threshold else Verdict.REGENERATE
    return Verdict(decision=decision, overall=overall, threshold=threshold)


class QualityEvaluator:
    def __init__(
        self,
        chat: ChatGateway,
        *,
        threshold: float = DEFAULT_THRESHOLD,
        load_image: Callable[[str], bytes] | None = None,
    ):
        self.chat = chat
        self.threshold = threshold
        self._load_image = load_image

    def evaluate(
        self,
        image: str,
        request: GenerationRequest,
        report: AnalysisReport,
        *,
        threshold: float | None = None,
    ) -> EvaluationResult:
        """Score the image on 6 aesthetic + 4 alignment sub-fields.

        Postconditions enforced locally: every sub-score in [0, 10],
        overall recomputed as the mean, and improvement_suggestions nonempty
        exactly when some sub-score is below the threshold or elements are
        missing.
        """
        gate = self.threshold if threshold is None else threshold
        attachments = (self._load_image(image),) if self._load_image else ()
        raw = self.chat.chat_structured(
            StructuredCallSpec(
                template_id="evaluate",
                variables={
                    "prompt": request.prompt,
                    "analysis_report_json": json.dumps(report.to_dict(), ensure_ascii=True),
                },
                expected_schema="evaluation",
                attachments=attachments,
            ),
            semantic_check=_scores_in_range,
            semantic_error=ScoreRangeError,
        )
        aesthetic = {k: float(raw["aesthetic"][k]) for k in AESTHETIC_KEYS}
        alignment = {k: float(raw["alignment"][k]) for k in ALIGNMENT_KEYS}
        missing = tuple(str(m) for m in raw.get("missing_elements", []))
        suggestions = str(raw.get("improvement_suggestions", "")).strip()

        sub_scores = [aesthetic[k] for k in AESTHETIC_KEYS] + [alignment[k] for k in ALIGNMENT_KEYS]
        needs_suggestions = bool(missing) or any(score < gate for score in sub_scores)
        if needs_suggestions and not suggestions:
            suggestions = _fallback_suggestion(aesthetic, alignment, missing, gate)
        elif not needs_suggestions:
            suggestions = ""

        result = EvaluationResult(
            aesthetic=aesthetic,
            alignment=alignment,
            missing_elements=missing,
            improvement_suggestions=suggestions,
            overall=compute_overall(sub_scores),
        )
        result.validate()
        return result


def _scores_in_range(value: dict) -> str | None:
    bad = []
    for group in ("aesthetic", "alignment"):
        for name, score in value[group].items():
            if not 0.0 <= float(score) <= 10.0:
                bad.append(f"{name}={score}")
    return f"sub-scores outside [0, 10]: {', '.join(bad)}" if bad else None


def _fallback_suggestion(
    aesthetic: dict[str, float], alignment: dict[str, float], missing: tuple[str, ...], gate: float
) -> str:
    weak = sorted(
        (name for name, score in {**aesthetic, **alignment}.items() if score < gate),
        key=lambda name: {**aesthetic, **alignment}[name],
    )
    parts = []
    if missing:
        parts.append("Include the missing elements: " + "; ".join(missing) + ".")
    if weak:
        parts.append("Improve " + ", ".join(w.replace("_", " ") for w in weak) + ".")
    return " ".join(parts)
