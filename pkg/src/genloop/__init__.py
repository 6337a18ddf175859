"""genloop: quality-gated multi-agent orchestration for text-to-image generation.

Three agents collaborate around pluggable model backends: an input
interpreter turns the raw prompt into a structured analysis report, a
generation engine routes work to a prompt-guided generator or a
reference-guided editor, and a quality evaluator scores each image on ten
sub-fields and gates regeneration against a threshold. Runs fully
automatic or human-in-the-loop.
"""

from .errors import GenloopError
from .orchestrator import (
    AutomaticHandler,
    FeedbackResponse,
    FinalResult,
    InteractionHandler,
    RunConfig,
    SessionRunner,
    regeneration_context,
    run_pipeline,
)
from .session import (
    AnalysisReport,
    ClarificationAnswer,
    ContinueDecision,
    CreativityLevel,
    EvaluationResult,
    GenerationPlan,
    GenerationRequest,
    SessionState,
    SessionStatus,
    TaskKind,
    compute_overall,
    new_session,
    record_turn,
    should_continue,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "AutomaticHandler",
    "ClarificationAnswer",
    "ContinueDecision",
    "CreativityLevel",
    "EvaluationResult",
    "FeedbackResponse",
    "FinalResult",
    "GenerationPlan",
    "GenerationRequest",
    "GenloopError",
    "InteractionHandler",
    "RunConfig",
    "SessionRunner",
    "SessionState",
    "SessionStatus",
    "TaskKind",
    "compute_overall",
    "new_session",
    "record_turn",
    "regeneration_context",
    "run_pipeline",
    "should_continue",
    "__version__",
]
