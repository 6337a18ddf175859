"""Orchestrator: the regeneration loop, suspension points, crash recovery."""

from __future__ import annotations

import json

import pytest

from conftest import make_runner, make_suite
from genloop.backends import ChatScenario, MockSegmentationBackend
from genloop.errors import PipelineError, StateError, UnknownElementError
from genloop.orchestrator import (
    AutomaticHandler,
    FeedbackResponse,
    InteractionHandler,
    RunConfig,
    SessionRunner,
    regeneration_context,
    run_pipeline,
)
from genloop.persistence import EventKind
from genloop.session import (
    ClarificationAnswer,
    GenerationRequest,
    Overrides,
    SessionStatus,
    new_session,
)

RED_CUBE = GenerationRequest(prompt="a red cube")


class CountingHandler(AutomaticHandler):
    def __init__(self):
        self.clarification_calls = 0
        self.feedback_calls = 0

    def ask_clarifications(self, questions):
        self.clarification_calls += 1
        return super().ask_clarifications(questions)

    def request_feedback(self, image, evaluation):
        self.feedback_calls += 1
        return super().request_feedback(image, evaluation)


class ScriptedHandler(InteractionHandler):
    """Plays back canned answers / feedback responses."""

    def __init__(self, answers=None, feedback=None):
        self.answers = answers or []
        self.feedback = list(feedback or [])
        self.seen_evaluations = []

    def ask_clarifications(self, questions):
        return self.answers

    def request_feedback(self, image, evaluation):
        self.seen_evaluations.append(evaluation)
        if self.feedback:
            return self.feedback.pop(0)
        return FeedbackResponse()


class TestRunPipeline:
    def test_scripted_three_turn_run(self, tmp_path):
        runner = make_runner(tmp_path, ChatScenario(scores=[7.0, 7.9, 8.4]))
        result = run_pipeline(RED_CUBE, runner=runner)
        assert result.turns == 3
        assert result.accepted is True
        assert len(runner.backends.generator.calls) == 3
        state = runner.state(result.session_id)
        assert [t.evaluation.overall for t in state.turns] == [7.0, 7.9, 8.4]
        assert result.image == state.turns[-1].image

    def test_exhaustion_returns_latest_image(self, tmp_path):
        runner = make_runner(tmp_path, ChatScenario(scores=[5.0]))
        result = run_pipeline(RED_CUBE, runner=runner)
        assert result.turns == 4  # 1 initial + max_regen(3)
        assert result.accepted is False
        assert len(runner.backends.generator.calls) == 4
        state = runner.state(result.session_id)
        assert result.image == state.turns[-1].image
        assert state.status is SessionStatus.DONE

    def test_immediate_accept_is_single_turn(self, tmp_path):
        runner = make_runner(tmp_path, ChatScenario(scores=[9.0]))
        result = run_pipeline(RED_CUBE, runner=runner)
        assert result.turns == 1
        assert result.accepted is True
        assert len(runner.backends.generator.calls) == 1

    def test_automatic_mode_never_invokes_handler(self, tmp_path):
        runner = make_runner(
            tmp_path,
            ChatScenario(
                scores=[5.0],
                ambiguities=[{"element": "cube finish", "questions": ["matte or glossy?"], "fill": "matte"}],
            ),
        )
        handler = CountingHandler()
        run_pipeline(RED_CUBE, handler=handler, runner=runner)
        assert handler.clarification_calls == 0
        assert handler.feedback_calls == 0

    @pytest.mark.parametrize("max_regen", [0, 1, 2, 3, 5])
    def test_loop_bound_for_budgets(self, tmp_path, max_regen):
        runner = make_runner(
            tmp_path, ChatScenario(scores=[5.0]), config=RunConfig(max_regen=max_regen)
        )
        result = run_pipeline(RED_CUBE, runner=runner)
        assert len(runner.backends.generator.calls) == max_regen + 1
        assert result.turns == max_regen + 1

    def test_request_overrides_trump_config(self, tmp_path):
        runner = make_runner(tmp_path, ChatScenario(scores=[7.0]))
        request = GenerationRequest(prompt="a red cube", overrides=Overrides(threshold=6.5, max_regen=0))
        result = run_pipeline(request, runner=runner)
        assert result.turns == 1
        assert result.accepted is True  # 7.0 >= overridden 6.5


class TestRegenerationContext:
    def test_carries_suggestions_feedback_and_image(self, tmp_path):
        suggestion = (
            "Ensure the vanilla cupcake with chocolate frosting is included in the arrangement, "
            "and present both cupcakes on the plate as specified in the prompt."
        )
        runner = make_runner(
            tmp_path, ChatScenario(scores=[{"all": 7.0, "improvement_suggestions": suggestion}, 9.0])
        )
        result = run_pipeline(GenerationRequest(prompt="two cupcakes"), runner=runner)
        state = runner.state(result.session_id)
        first_turn = state.turns[0]
        ctx = regeneration_context(
            type(state)(
                id=state.id,
                request=state.request,
                report=state.report,
                turns=state.turns[:1],
                regen_count=0,
                status=SessionStatus.EVALUATING,
            )
        )
        assert ctx.improvement_suggestions == suggestion  # verbatim, no paraphrase
        assert ctx.previous_image == first_turn.image
        assert ctx.user_feedback is None  # automatic mode leaves feedback unset
        assert ctx.forced_generate is False

    def test_switch_phrase_forces_generation(self, tmp_path):
        runner = make_runner(
            tmp_path,
            ChatScenario(
                scores=[
                    {"all": 6.0, "improvement_suggestions": "This needs a switch to the generation model."},
                    9.0,
                ]
            ),
        )
        result = run_pipeline(RED_CUBE, runner=runner)
        state = runner.state(result.session_id)
        assert state.turns[1].plan.task_kind.value == "GENERATE"

    def test_empty_session_rejected(self):
        with pytest.raises(StateError):
            regeneration_context(new_session(RED_CUBE))

    def test_second_plan_prompt_carries_suggestion_text(self, tmp_path):
        suggestion = "Ensure the vanilla cupcake is included in the arrangement."
        runner = make_runner(
            tmp_path, ChatScenario(scores=[{"all": 7.0, "improvement_suggestions": suggestion}, 9.0])
        )
        result = run_pipeline(GenerationRequest(prompt="two cupcakes"), runner=runner)
        state = runner.state(result.session_id)
        assert suggestion in state.turns[1].plan.generating_prompt


class TestInteractiveFlow:
    def test_clarification_answer_reaches_report(self, tmp_path):
        runner = make_runner(
            tmp_path,
            ChatScenario(
                scores=[9.0],
                ambiguities=[{"element": "flag", "questions": ["Which nation's flag?"], "fill": "any flag"}],
            ),
        )
        handler = ScriptedHandler(
            answers=[ClarificationAnswer(element="flag", answer="Japanese flag")],
            feedback=[FeedbackResponse(accept=True)],
        )
        request = GenerationRequest(prompt="An astronaut with a flag patch", interactive=True)
        result = run_pipeline(request, handler=handler, runner=runner)
        state = runner.state(result.session_id)
        flag = state.report.ambiguous_elements[0]
        assert flag.resolution.source.value == "HUMAN"
        assert flag.resolution.answer == "Japanese flag"

    def test_resume_with_answers_on_wrong_status(self, tmp_path):
        runner = make_runner(tmp_path, ChatScenario(scores=[9.0]))
        result = run_pipeline(RED_CUBE, runner=runner)
        with pytest.raises(StateError):
            runner.resume_with_answers(result.session_id, [])

    def test_unknown_answer_element_rejected_before_logging(self, tmp_path):
        runner = make_runner(
            tmp_path,
            ChatScenario(scores=[9.0], ambiguities=[{"element": "flag", "questions": ["?"], "fill": "x"}]),
        )
        state = runner.create(GenerationRequest(prompt="astronaut with flag", interactive=True))
        runner.advance(state.id)
        seq_before = runner.log.last_seq(state.id)
        with pytest.raises(UnknownElementError):
            runner.resume_with_answers(state.id, [ClarificationAnswer(element="helmet", answer="gold")])
        assert runner.log.last_seq(state.id) == seq_before

    def test_feedback_text_flows_into_next_plan(self, tmp_path):
        runner = make_runner(tmp_path, ChatScenario(scores=[7.0, 9.0]))
        handler = ScriptedHandler(
            feedback=[FeedbackResponse(text="make the sky darker"), FeedbackResponse(accept=True)]
        )
        request = GenerationRequest(prompt="a red cube at dusk", interactive=True)
        result = run_pipeline(request, handler=handler, runner=runner)
        state = runner.state(result.session_id)
        assert state.turns[0].user_feedback == "make the sky darker"
        assert "make the sky darker" in state.turns[1].plan.generating_prompt

    def test_user_accepts_early_despite_regenerate_verdict(self, tmp_path):
        runner = make_runner(tmp_path, ChatScenario(scores=[6.0]))
        handler = ScriptedHandler(feedback=[FeedbackResponse(accept=True)])
        request = GenerationRequest(prompt="a red cube", interactive=True)
        result = run_pipeline(request, handler=handler, runner=runner)
        assert result.turns == 1
        assert result.accepted is True
        done = runner.log.read(result.session_id)[-1]
        assert done.kind is EventKind.DONE
        assert done.payload["reason"] == "user_accept"

    def test_forced_regeneration_on_accept_counts_against_budget(self, tmp_path):
        runner = make_runner(tmp_path, ChatScenario(scores=[9.0, 9.5]))
        handler = ScriptedHandler(
            feedback=[FeedbackResponse(regenerate=True, text="try a deeper red"), FeedbackResponse()]
        )
        request = GenerationRequest(prompt="a red cube", interactive=True)
        result = run_pipeline(request, handler=handler, runner=runner)
        assert result.turns == 2
        assert result.accepted is True
        state = runner.state(result.session_id)
        assert state.regen_count == 1

    def test_forced_regeneration_blocked_when_exhausted(self, tmp_path):
        runner = make_runner(tmp_path, ChatScenario(scores=[9.0]), config=RunConfig(max_regen=0))
        handler = ScriptedHandler(feedback=[FeedbackResponse(regenerate=True)])
        request = GenerationRequest(prompt="a red cube", interactive=True)
        result = run_pipeline(request, handler=handler, runner=runner)
        assert result.turns == 1  # budget spent; accept wins
        assert result.accepted is True


class TestFailureHandling:
    def test_region_failure_falls_back_to_previous_image(self, tmp_path):
        # turn 2 wants an edit but every cascade stage fails
        scenario = ChatScenario(
            scores=[{"all": 6.0, "improvement_suggestions": "remove the blemish from the cube"}, 9.0],
            boxes=None,
            context_boxes=None,
        )
        runner = make_runner(tmp_path, scenario, segmenter=MockSegmentationBackend(default="notfound"))
        result = run_pipeline(RED_CUBE, runner=runner)
        state = runner.state(result.session_id)
        assert result.accepted is False
        assert result.turns == 1
        assert result.image == state.turns[0].image  # previous image kept
        kinds = [r.kind for r in runner.log.read(result.session_id)]
        assert EventKind.ERROR in kinds
        assert kinds[-1] is EventKind.DONE

    def test_first_turn_failure_raises_pipeline_error(self, tmp_path):
        from genloop.backends import MockGenerationBackend

        suite = make_suite(ChatScenario(scores=[9.0]), generator=MockGenerationBackend(fail_times=5))
        runner = SessionRunner(suite, tmp_path / "store", image_size=(32, 32))
        with pytest.raises(PipelineError):
            run_pipeline(RED_CUBE, runner=runner)
        session_id = runner.log.session_ids()[0]
        assert runner.state(session_id).status is SessionStatus.FAILED
        kinds = [r.kind for r in runner.log.read(session_id)]
        assert kinds[-1] is EventKind.ERROR  # partial session persisted


class TestConcurrency:
    def test_sixteen_concurrent_sessions_do_not_interfere(self, tmp_path):
        import threading

        runner = make_runner(tmp_path, ChatScenario(scores=[9.0]))
        results: dict[int, object] = {}
        errors: list[Exception] = []

        def worker(i: int):
            try:
                results[i] = run_pipeline(
                    GenerationRequest(prompt=f"scene {i}"), runner=runner, session_id=f"concurrent-{i:02d}"
                )
            except Exception as exc:  # noqa: BLE001
                errors.append(exc)

        threads = [threading.Thread(target=worker, args=(i,)) for i in range(16)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert errors == []
        assert len(results) == 16
        for i, result in results.items():
            assert result.accepted is True
            state = runner.state(f"concurrent-{i:02d}")
            assert state.request.prompt == f"scene {i}"  # no cross-session bleed
            assert state.status is SessionStatus.DONE


def _truncate_log(tmp_path, session_id: str, keep: int) -> None:
    path = tmp_path / "store" / "sessions" / session_id / "events.jsonl"
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:keep]) + "\n")


def _kind_index(tmp_path, session_id: str, kind: str, occurrence: int = 1) -> int:
    path = tmp_path / "store" / "sessions" / session_id / "events.jsonl"
    count = 0
    for i, line in enumerate(path.read_text().splitlines(), start=1):
        if json.loads(line)["kind"] == kind:
            count += 1
            if count == occurrence:
                return i
    raise AssertionError(f"no {occurrence}th {kind} event")


class TestCrashRecovery:
    def _finish(self, tmp_path, scenario: ChatScenario, keep_through: tuple[str, int]):
        runner_a = make_runner(tmp_path, ChatScenario(scores=[7.0, 8.5]))
        result = run_pipeline(RED_CUBE, runner=runner_a)
        sid = result.session_id
        _truncate_log(tmp_path, sid, _kind_index(tmp_path, sid, *keep_through))
        # fresh runner simulates the restarted process
        runner_b = make_runner(tmp_path, scenario)
        state = runner_b.advance(sid)
        assert state.status is SessionStatus.DONE
        records = runner_b.log.read(sid)
        assert [r.seq for r in records] == list(range(1, len(records) + 1))
        return runner_b, sid

    def test_resume_after_plan_skips_replanning(self, tmp_path):
        runner_b, sid = self._finish(tmp_path, ChatScenario(scores=[8.5]), ("PLAN", 2))
        chat_tasks = [c.task_id for c in runner_b.backends.chat.backend.calls]
        assert chat_tasks == ["evaluate"]  # no identify/plan repeats
        assert len(runner_b.backends.generator.calls) == 1  # the interrupted execution reruns

    def test_resume_after_image_skips_generation(self, tmp_path):
        runner_b, sid = self._finish(tmp_path, ChatScenario(scores=[8.5]), ("IMAGE", 2))
        assert runner_b.backends.generator.calls == []
        assert [c.task_id for c in runner_b.backends.chat.backend.calls] == ["evaluate"]

    def test_resume_after_eval_recomputes_verdict_only(self, tmp_path):
        runner_b, sid = self._finish(tmp_path, ChatScenario(scores=[999]), ("EVAL", 2))
        assert runner_b.backends.chat.backend.calls == []  # decision is pure arithmetic
        assert runner_b.backends.generator.calls == []
        assert runner_b.state(sid).turns[-1].evaluation.overall == 8.5  # from the log, not the mock

    def test_resume_after_verdict_finishes(self, tmp_path):
        runner_b, sid = self._finish(tmp_path, ChatScenario(scores=[999]), ("VERDICT", 2))
        assert runner_b.backends.chat.backend.calls == []
        result = runner_b.final_result(sid)
        assert result.accepted is True
