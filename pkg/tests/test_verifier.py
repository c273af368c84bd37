from __future__ import annotations

import itertools
from fractions import Fraction

import pytest

from conftest import gradient_sequence, scripted_judge
from tceval.assertions import COMPLETION, CONSISTENCY, OTHER, Assertion, AssertionSet
from tceval.cache import FileCache
from tceval.providers import ProviderError, ScriptedResponses, ScriptedVisionClient
from tceval.verifier import (
    NO,
    YES,
    Verdict,
    VerifierError,
    aggregate_report,
    compute_tc,
    compute_tc_score_t2v,
    compute_tcr,
    evaluate_video,
    parse_judge_answer,
    verify_assertion,
)


def make_set(dims: list[str], prompt_id: str = "p") -> AssertionSet:
    """Structured set: first two assertions are the frame-1/frame-16 checks."""
    assertions = []
    for i, dim in enumerate(dims, start=1):
        idx = (1,) if i == 1 else (16,) if i == 2 else (1, 6) if dim == CONSISTENCY else (9,)
        assertions.append(Assertion(f"{prompt_id}#a{i:02d}", dim, idx, f"Check {i}?"))
    return AssertionSet(prompt_id=prompt_id, assertions=assertions)


def verdicts_for(aset: AssertionSet, pattern: tuple[bool, ...]) -> list[Verdict]:
    return [
        Verdict(assertion_id=a.id, answer=YES if yes else NO)
        for a, yes in zip(aset.assertions, pattern)
    ]


def tc_brute(dims: list[str], pattern: tuple[bool, ...]) -> int:
    relevant = [y for d, y in zip(dims, pattern) if d in (COMPLETION, CONSISTENCY)]
    return int(all(relevant))


def tcr_brute(tcs: list[int]) -> float:
    return float(Fraction(100 * sum(tcs), len(tcs)))


def score_brute(pattern: tuple[bool, ...]) -> float:
    return float(Fraction(sum(pattern), len(pattern)))


def dim_layout(n: int) -> list[str]:
    dims = [COMPLETION, COMPLETION]
    fillers = itertools.cycle([CONSISTENCY, OTHER, COMPLETION])
    while len(dims) < n:
        dims.append(next(fillers))
    return dims[:n]


class TestParseJudgeAnswer:
    def test_plain_yes(self):
        assert parse_judge_answer("Yes.") == YES

    def test_lowercase_no_with_tail(self):
        assert parse_judge_answer("no, the chameleon is still brown") == NO

    def test_unparsable(self):
        assert parse_judge_answer("Maybe?") is None
        assert parse_judge_answer("") is None

    def test_punctuation_stripped(self):
        assert parse_judge_answer('"Yes"') == YES


class TestComputeTcOracle:
    def test_exhaustive_patterns_match_brute_force(self):
        for n in range(2, 9):
            dims = dim_layout(n)
            aset = make_set(dims)
            for pattern in itertools.product((True, False), repeat=n):
                verdicts = verdicts_for(aset, pattern)
                assert compute_tc(verdicts, aset) == tc_brute(dims, pattern)
                assert compute_tc_score_t2v(verdicts, aset) == pytest.approx(
                    score_brute(pattern), abs=1e-15
                )

    def test_other_dimension_never_gates_tc(self):
        dims = [COMPLETION, COMPLETION, OTHER]
        aset = make_set(dims)
        assert compute_tc(verdicts_for(aset, (True, True, False)), aset) == 1

    def test_single_completion_no_gives_zero(self):
        dims = [COMPLETION, COMPLETION, CONSISTENCY]
        aset = make_set(dims)
        assert compute_tc(verdicts_for(aset, (True, False, True)), aset) == 0

    def test_empty_consistency_vacuously_passes(self):
        dims = [COMPLETION, COMPLETION, OTHER]
        aset = make_set(dims)
        assert compute_tc(verdicts_for(aset, (True, True, False)), aset) == 1

    def test_missing_in_scope_verdict_is_an_error(self):
        aset = make_set([COMPLETION, COMPLETION])
        with pytest.raises(VerifierError, match="missing verdict"):
            compute_tc(verdicts_for(aset, (True,))[:1], aset)

    def test_monotone_in_verdict_flips(self):
        dims = dim_layout(6)
        aset = make_set(dims)
        for pattern in itertools.product((True, False), repeat=6):
            base = compute_tc(verdicts_for(aset, pattern), aset)
            for flip in range(6):
                if pattern[flip]:
                    continue
                flipped = tuple(
                    True if i == flip else p for i, p in enumerate(pattern)
                )
                after = compute_tc(verdicts_for(aset, flipped), aset)
                assert after >= base
                if dims[flip] == OTHER:
                    assert after == base


class TestTcr:
    def test_half(self):
        assert compute_tcr([1, 0]) == 50.0

    def test_all_zero(self):
        assert compute_tcr([0, 0, 0]) == 0.0

    def test_two_in_thirty_four(self):
        tcs = [1, 1] + [0] * 32
        assert compute_tcr(tcs) == pytest.approx(tcr_brute(tcs), abs=1e-12)

    def test_empty_is_an_error(self):
        with pytest.raises(VerifierError):
            compute_tcr([])


class TestTcScore:
    def test_four_of_six(self):
        aset = make_set(dim_layout(6))
        pattern = (True, True, True, True, False, False)
        assert compute_tc_score_t2v(verdicts_for(aset, pattern), aset) == pytest.approx(
            4 / 6, abs=1e-9
        )

    def test_all_yes_is_one(self):
        aset = make_set(dim_layout(5))
        assert compute_tc_score_t2v(verdicts_for(aset, (True,) * 5), aset) == 1.0

    def test_stray_verdict_is_an_error(self):
        aset = make_set([COMPLETION, COMPLETION])
        verdicts = verdicts_for(aset, (True, True))
        verdicts.append(Verdict(assertion_id="ghost", answer=YES))
        with pytest.raises(VerifierError, match="unknown"):
            compute_tc_score_t2v(verdicts, aset)

    def test_duplicate_verdict_is_an_error(self):
        aset = make_set([COMPLETION, COMPLETION])
        verdicts = verdicts_for(aset, (True, True)) + verdicts_for(aset, (True, True))[:1]
        with pytest.raises(VerifierError, match="multiple"):
            compute_tc_score_t2v(verdicts, aset)


class TestVerifyAssertion:
    def test_yes_verdict(self):
        seq = gradient_sequence(16)
        a = Assertion("a1", COMPLETION, (1,), "Is there anything?")
        v = verify_assertion(a, seq, scripted_judge())
        assert v.answer == YES and not v.degraded

    def test_case_insensitive_first_token(self):
        seq = gradient_sequence(16)
        judge = ScriptedVisionClient(
            ScriptedResponses(rules=[], default="no, the chameleon is still brown")
        )
        a = Assertion("a1", COMPLETION, (1,), "Green yet?")
        v = verify_assertion(a, seq, judge)
        assert v.answer == NO and not v.degraded

    def test_client_failure_degrades_to_no(self):
        class Timeout:
            def judge(self, png, prompt):
                raise ProviderError("timed out", retries=3)

        seq = gradient_sequence(16)
        a = Assertion("a1", COMPLETION, (1,), "Hm?")
        v = verify_assertion(a, seq, Timeout())
        assert v.answer == NO and v.degraded

    def test_unparsable_after_reprompt_degrades(self):
        judge = ScriptedVisionClient(ScriptedResponses(rules=[], default="perhaps"))
        seq = gradient_sequence(16)
        a = Assertion("a1", COMPLETION, (1,), "Hm?")
        v = verify_assertion(a, seq, judge)
        assert v.answer == NO and v.degraded
        assert judge.calls == 2

    def test_cache_avoids_second_call(self, tmp_path):
        cache = FileCache(tmp_path)
        judge = scripted_judge()
        seq = gradient_sequence(16)
        a = Assertion("a1", COMPLETION, (1, 6), "Same?")
        first = verify_assertion(a, seq, judge, model_name="m", cache=cache)
        calls = judge.calls
        second = verify_assertion(a, seq, judge, model_name="m", cache=cache)
        assert judge.calls == calls
        assert (first.answer, first.raw_response) == (second.answer, second.raw_response)

    def test_prompt_mentions_frame_count_and_suffix(self):
        captured = {}

        class Capture:
            def judge(self, png, prompt):
                captured["prompt"] = prompt
                return "Yes"

        seq = gradient_sequence(16)
        a = Assertion("a1", CONSISTENCY, (1, 6), "Same chameleon?")
        verify_assertion(a, seq, Capture())
        assert captured["prompt"].startswith(
            "The image shows 2 video frames in temporal order, left to right."
        )
        assert captured["prompt"].rstrip().endswith("Answer with Yes or No only.")
        assert "Same chameleon?" in captured["prompt"]


class TestAggregate:
    def test_single_video_full_marks(self):
        aset = make_set(dim_layout(4), prompt_id="p1")
        ev = evaluate_video("p1", "p1__r1", verdicts_for(aset, (True,) * 4), aset)
        report = aggregate_report([ev], {"p1": "attribute"}, model="toy")
        assert report.overall.tcr == 100.0
        assert report.per_category["attribute"].videos == 1

    def test_overall_is_flat_mean_not_mean_of_means(self):
        aset1 = make_set(dim_layout(4), prompt_id="p1")
        aset2 = make_set(dim_layout(4), prompt_id="p2")
        evals = [
            evaluate_video("p1", "p1__r1", verdicts_for(aset1, (True,) * 4), aset1),
            evaluate_video("p1", "p1__r2", verdicts_for(aset1, (False,) * 4), aset1),
            evaluate_video("p2", "p2__r1", verdicts_for(aset2, (False,) * 4), aset2),
            evaluate_video("p2", "p2__r2", verdicts_for(aset2, (False,) * 4), aset2),
        ]
        cats = {"p1": "attribute", "p2": "background"}
        report = aggregate_report(evals, cats, model="toy")
        assert report.overall.tcr == 25.0
        assert report.per_category["attribute"].tcr == 50.0
        assert report.per_category["background"].tcr == 0.0

    def test_unknown_prompt_id(self):
        aset = make_set(dim_layout(4), prompt_id="p1")
        ev = evaluate_video("p1", "v", verdicts_for(aset, (True,) * 4), aset)
        with pytest.raises(VerifierError, match="unknown prompt"):
            aggregate_report([ev], {"other": "attribute"})

    def test_single_in_scope_assertion_degenerate_identity(self):
        # with exactly one in-scope assertion per video and nothing else,
        # the mean pass rate collapses onto the completion ratio
        aset = AssertionSet(
            prompt_id="p1",
            assertions=[Assertion("p1#a01", COMPLETION, (1,), "Done?")],
        )
        evals = [
            evaluate_video("p1", f"p1__r{i}", [Verdict("p1#a01", YES if i % 3 else NO)], aset)
            for i in range(9)
        ]
        report = aggregate_report(evals, {"p1": "attribute"})
        assert report.overall.mean_tc_score == pytest.approx(
            report.overall.tcr / 100.0, abs=1e-12
        )

    def test_degraded_fraction_reported(self):
        aset = make_set(dim_layout(4), prompt_id="p1")
        verdicts = verdicts_for(aset, (True,) * 4)
        verdicts[0].degraded = True
        ev = evaluate_video("p1", "v", verdicts, aset)
        report = aggregate_report([ev], {"p1": "attribute"})
        assert report.degraded_fraction == 0.25
