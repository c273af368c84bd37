"""
Completion scoring: per-video gate and pass rate
================================================

A video completes its transition only when every completion and consistency
assertion is verified; other-objects checks never gate completion but do
enter the per-video pass rate.  This script walks the scoring math on
hand-built verdicts and shows how per-model numbers aggregate.
"""

from tceval.assertions import Assertion, AssertionSet
from tceval.verifier import (
    Verdict,
    aggregate_report,
    compute_tc,
    compute_tc_score_t2v,
    compute_tcr,
    evaluate_video,
    report_to_csv,
)

# Six assertions in the usual layout: four completion checks (first frame,
# last frame, midpoint, sampled sequence), two consistency pairs.
aset = AssertionSet(
    prompt_id="chameleon-01",
    assertions=[
        Assertion("c1", "completion", (1,), "Is there a brown chameleon?"),
        Assertion("c2", "completion", (16,), "Is there a bright green chameleon?"),
        Assertion("c3", "completion", (9,), "Is the color in between?"),
        Assertion("c4", "completion", (1, 5, 9, 13, 16), "Did the color change?"),
        Assertion("s1", "consistency", (1, 6), "Same chameleon in 1 and 6?"),
        Assertion("s2", "consistency", (1, 11), "Same chameleon in 1 and 11?"),
    ],
)

# Video A passes everything; video B fails one consistency check.
yes = lambda aid: Verdict(assertion_id=aid, answer="Yes")
no = lambda aid: Verdict(assertion_id=aid, answer="No")

verdicts_a = [yes(a.id) for a in aset.assertions]
verdicts_b = [yes("c1"), yes("c2"), yes("c3"), yes("c4"), yes("s1"), no("s2")]

print("video A: tc =", compute_tc(verdicts_a, aset),
      " pass rate =", compute_tc_score_t2v(verdicts_a, aset))
print("video B: tc =", compute_tc(verdicts_b, aset),
      " pass rate =", round(compute_tc_score_t2v(verdicts_b, aset), 4))

# The completion ratio is just the percentage of gated videos.
print("TCR over [A, B]:", compute_tcr([1, 0]))

# Aggregation keeps per-category slices and a flat overall mean: the overall
# row averages videos, never category means.
evals = [
    evaluate_video("chameleon-01", "chameleon-01__r1", verdicts_a, aset),
    evaluate_video("chameleon-01", "chameleon-01__r2", verdicts_b, aset),
]
report = aggregate_report(evals, {"chameleon-01": "attribute"}, model="demo-model")
print()
print(report_to_csv(report))
