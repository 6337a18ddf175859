"""Quality evaluator: scoring, verdicts, and the out-of-range re-ask."""

from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import make_evaluation, make_report, make_suite
from genloop.backends import ChatScenario
from genloop.errors import ScoreRangeError
from genloop.evaluator import QualityEvaluator, Verdict, recommends_generation, render_verdict
from genloop.session import GenerationRequest, compute_overall

# Sub-scores consistent with the known example: four shown values
# (7.5, 8.5, 6.0, 6.5) plus six at 8.0 average exactly to 7.65.
TRACE_AESTHETIC = {
    "composition": 7.5,
    "color_harmony": 8.5,
    "lighting_exposure": 8.0,
    "focus_sharpness": 8.0,
    "emotional_impact": 8.0,
    "uniqueness_creativity": 8.0,
}
TRACE_ALIGNMENT = {
    "main_subjects_presence": 6.0,
    "spatial_accuracy": 6.5,
    "style_adherence": 8.0,
    "background_representation": 8.0,
}
TRACE_MISSING = ["Vanilla cupcake with chocolate frosting", "Plate arrangement of both cupcakes"]
TRACE_SUGGESTION = (
    "Ensure the vanilla cupcake with chocolate frosting is included in the arrangement, "
    "and present both cupcakes on the plate as specified in the prompt."
)


def evaluator_with(scenario: ChatScenario) -> tuple[QualityEvaluator, object]:
    suite = make_suite(scenario)
    return QualityEvaluator(suite.chat), suite.chat.backend


class TestEvaluate:
    def test_cupcake_first_attempt_scores(self):
        scenario = ChatScenario(
            scores=[
                {
                    "aesthetic": TRACE_AESTHETIC,
                    "alignment": TRACE_ALIGNMENT,
                    "missing_elements": TRACE_MISSING,
                    "improvement_suggestions": TRACE_SUGGESTION,
                }
            ]
        )
        evaluator, _ = evaluator_with(scenario)
        result = evaluator.evaluate("img", GenerationRequest(prompt="two cupcakes on a plate"), make_report())
        assert result.overall == pytest.approx(7.65, abs=1e-12)
        assert result.aesthetic["composition"] == 7.5
        assert result.aesthetic["color_harmony"] == 8.5
        assert result.alignment["main_subjects_presence"] == 6.0
        assert result.alignment["spatial_accuracy"] == 6.5
        assert list(result.missing_elements) == TRACE_MISSING
        assert result.improvement_suggestions == TRACE_SUGGESTION

    def test_equal_scores_mean(self):
        evaluator, _ = evaluator_with(ChatScenario(scores=[8.0]))
        result = evaluator.evaluate("img", GenerationRequest(prompt="x"), make_report())
        assert result.overall == 8.0

    def test_out_of_range_twice_raises_after_reask(self):
        scenario = ChatScenario(scores=[{"aesthetic": {"composition": 12.0}}] * 2)
        evaluator, backend = evaluator_with(scenario)
        with pytest.raises(ScoreRangeError):
            evaluator.evaluate("img", GenerationRequest(prompt="x"), make_report())
        assert len(backend.calls) == 2  # one ask + one re-ask

    def test_out_of_range_then_valid_recovers(self):
        scenario = ChatScenario(scores=[{"aesthetic": {"composition": 12.0}}, 8.0])
        evaluator, backend = evaluator_with(scenario)
        result = evaluator.evaluate("img", GenerationRequest(prompt="x"), make_report())
        assert result.overall == 8.0
        assert len(backend.calls) == 2

    def test_suggestions_cleared_when_all_strong(self):
        scenario = ChatScenario(scores=[{"all": 9.0, "improvement_suggestions": "spurious advice"}])
        evaluator, _ = evaluator_with(scenario)
        result = evaluator.evaluate("img", GenerationRequest(prompt="x"), make_report())
        assert result.improvement_suggestions == ""

    def test_suggestions_synthesized_when_weak_but_absent(self):
        scenario = ChatScenario(scores=[{"all": 6.0, "improvement_suggestions": ""}])
        evaluator, _ = evaluator_with(scenario)
        result = evaluator.evaluate("img", GenerationRequest(prompt="x"), make_report())
        assert result.improvement_suggestions != ""

    def test_suggestions_kept_when_missing_elements_present(self):
        scenario = ChatScenario(scores=[{"all": 9.0, "missing_elements": ["the moon"],
                                         "improvement_suggestions": "add the moon"}])
        evaluator, _ = evaluator_with(scenario)
        result = evaluator.evaluate("img", GenerationRequest(prompt="x"), make_report())
        assert result.improvement_suggestions == "add the moon"

    def test_deterministic_for_identical_inputs(self):
        results = []
        for _ in range(2):
            evaluator, _ = evaluator_with(ChatScenario(scores=[7.25]))
            results.append(evaluator.evaluate("img", GenerationRequest(prompt="x"), make_report()))
        assert results[0] == results[1]


class TestRenderVerdict:
    def test_trace_value_regenerates(self):
        evaluation = make_evaluation(overrides={**TRACE_AESTHETIC, **TRACE_ALIGNMENT})
        assert evaluation.overall == pytest.approx(7.65, abs=1e-12)
        verdict = render_verdict(evaluation, 8.0)
        assert verdict.decision == Verdict.REGENERATE
        assert verdict.overall == pytest.approx(7.65, abs=1e-12)
        assert verdict.threshold == 8.0

    def test_boundary_accepts(self):
        assert render_verdict(make_evaluation(8.0), 8.0).decision == Verdict.ACCEPT

    def test_clear_pass_accepts(self):
        assert render_verdict(make_evaluation(9.2), 8.0).decision == Verdict.ACCEPT

    @given(
        low=st.floats(min_value=0, max_value=10),
        high=st.floats(min_value=0, max_value=10),
        threshold=st.floats(min_value=0, max_value=10),
    )
    def test_monotone_in_overall(self, low, high, threshold):
        lo, hi = sorted((low, high))
        lower = render_verdict(make_evaluation(lo), threshold)
        higher = render_verdict(make_evaluation(hi), threshold)
        if lower.decision == Verdict.ACCEPT:
            assert higher.decision == Verdict.ACCEPT

    def test_verdict_ignores_which_field_is_weak(self):
        a = make_evaluation(8.0, overrides={"composition": 4.0})
        b = make_evaluation(8.0, overrides={"background_representation": 4.0})
        assert render_verdict(a, 8.0).decision == render_verdict(b, 8.0).decision

    def test_optional_weights_change_the_gate_only(self):
        # mean is (4 + 9*8)/10 = 7.6; weighting composition drags the gate down
        evaluation = make_evaluation(8.0, overrides={"composition": 4.0})
        unweighted = render_verdict(evaluation, 7.5)
        weighted = render_verdict(evaluation, 7.5, weights={"composition": 100.0})
        assert unweighted.decision == Verdict.ACCEPT
        assert weighted.decision == Verdict.REGENERATE
        assert evaluation.overall == unweighted.overall  # stored overall untouched


class TestComputeOverallProperties:
    @given(st.lists(st.floats(min_value=0, max_value=10), min_size=10, max_size=10))
    def test_matches_exact_fraction_mean(self, scores):
        exact = sum(Fraction(s) for s in scores) / 10
        assert abs(compute_overall(scores) - float(exact)) <= 1e-9

    @given(st.lists(st.floats(min_value=0, max_value=10), min_size=10, max_size=10), st.randoms())
    def test_permutation_invariant(self, scores, rng):
        shuffled = list(scores)
        rng.shuffle(shuffled)
        assert compute_overall(shuffled) == compute_overall(scores)

    @given(st.lists(st.floats(min_value=0, max_value=10), min_size=10, max_size=10))
    def test_bounded_by_min_max(self, scores):
        overall = compute_overall(scores)
        assert min(scores) - 1e-12 <= overall <= max(scores) + 1e-12


class TestSwitchDetection:
    def test_detects_switch_phrase(self):
        assert recommends_generation("The edit failed; switch to the generation model for this change.")
        assert recommends_generation("Consider switching to the generation model.")

    def test_ignores_other_suggestions(self):
        assert not recommends_generation("Add the missing cupcake and fix the lighting.")
        assert not recommends_generation("")
