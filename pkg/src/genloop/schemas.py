"""JSON schemas for every structured chat call, keyed by schema id."""

from __future__ import annotations

from .session import AESTHETIC_KEYS, ALIGNMENT_KEYS, CREATIVITY_FILL_KEYS

_SCORE = {"type": "number"}  # range checked semantically so out-of-range gets its own re-ask

DRAFT_ANALYSIS_SCHEMA = {
    "type": "object",
    "required": ["main_subjects", "creativity_fills", "ambiguous_elements"],
    "properties": {
        "main_subjects": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "attributes": {"type": "string"},
                },
            },
        },
        "references": {"type": ["string", "null"]},
        "creativity_fills": {
            "type": "object",
            "properties": {k: {"type": "string"} for k in CREATIVITY_FILL_KEYS},
            "additionalProperties": False,
        },
        "ambiguous_elements": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["element", "reason", "clarification_questions"],
                "properties": {
                    "element": {"type": "string", "minLength": 1},
                    "reason": {"type": "string"},
                    "clarification_questions": {
                        "type": "array",
                        "minItems": 1,
                        "items": {"type": "string", "minLength": 1},
                    },
                },
            },
        },
    },
}

RESOLUTIONS_SCHEMA = {
    "type": "object",
    "required": ["resolutions"],
    "properties": {
        "resolutions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["element", "answer"],
                "properties": {
                    "element": {"type": "string", "minLength": 1},
                    "answer": {"type": "string", "minLength": 1},
                },
            },
        },
    },
}

DETAILED_PROMPT_SCHEMA = {
    "type": "object",
    "required": ["detailed_prompt"],
    "properties": {"detailed_prompt": {"type": "string", "minLength": 1}},
}

TASK_DECISION_SCHEMA = {
    "type": "object",
    "required": ["task", "rationale"],
    "properties": {
        "task": {"type": "string", "enum": ["GENERATE", "EDIT"]},
        "rationale": {"type": "string"},
    },
}

PLAN_GENERATE_SCHEMA = {
    "type": "object",
    "required": ["generating_prompt", "reasoning", "confidence"],
    "properties": {
        "generating_prompt": {"type": "string", "minLength": 1},
        "selected_model": {"type": "string"},
        "reasoning": {"type": "string"},
        "confidence": {"type": "number", "minimum": 0, "maximum": 1},
    },
}

PLAN_EDIT_SCHEMA = {
    "type": "object",
    "required": ["generating_prompt", "edit_mode", "target_expression", "reasoning", "confidence"],
    "properties": {
        "generating_prompt": {"type": "string", "minLength": 1},
        "selected_model": {"type": "string"},
        "edit_mode": {"type": "string", "enum": ["ADD", "REPLACE", "REMOVE"]},
        "target_expression": {"type": "string", "minLength": 1},
        "reasoning": {"type": "string"},
        "confidence": {"type": "number", "minimum": 0, "maximum": 1},
    },
}

EVALUATION_SCHEMA = {
    "type": "object",
    "required": ["aesthetic", "alignment", "missing_elements", "improvement_suggestions"],
    "properties": {
        "aesthetic": {
            "type": "object",
            "required": list(AESTHETIC_KEYS),
            "properties": {k: _SCORE for k in AESTHETIC_KEYS},
            "additionalProperties": False,
        },
        "alignment": {
            "type": "object",
            "required": list(ALIGNMENT_KEYS),
            "properties": {k: _SCORE for k in ALIGNMENT_KEYS},
            "additionalProperties": False,
        },
        "missing_elements": {"type": "array", "items": {"type": "string"}},
        "improvement_suggestions": {"type": "string"},
        "overall": {"type": "number"},
    },
}

BOXES_SCHEMA = {
    "type": "object",
    "required": ["boxes"],
    "properties": {
        "boxes": {
            "type": "array",
            "items": {
                "type": "array",
                "minItems": 4,
                "maxItems": 4,
                "items": {"type": "number"},
            },
        },
    },
}

SCHEMAS: dict[str, dict] = {
    "draft_analysis": DRAFT_ANALYSIS_SCHEMA,
    "resolutions": RESOLUTIONS_SCHEMA,
    "detailed_prompt": DETAILED_PROMPT_SCHEMA,
    "task_decision": TASK_DECISION_SCHEMA,
    "plan_generate": PLAN_GENERATE_SCHEMA,
    "plan_edit": PLAN_EDIT_SCHEMA,
    "evaluation": EVALUATION_SCHEMA,
    "boxes": BOXES_SCHEMA,
}
