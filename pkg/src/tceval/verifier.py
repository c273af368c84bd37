"""Assertion verification with a vision-language judge and completion scoring.

A video passes a prompt (tc = 1) only when every completion and consistency
assertion is answered Yes; the other-objects checks never gate tc but do
enter the per-video pass rate (tc_score).  Judge failures degrade to a No
verdict so scoring stays conservative; the degraded flag is preserved so
reports can disclose the degraded fraction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .assertions import AssertionSet
from .cache import FileCache, content_key
from .providers import ProviderError
from .video_io import FrameSequence, compose_horizontal, encode_png, frame_hash

JUDGE_PREAMBLE = "The image shows {n} video frames in temporal order, left to right."
JUDGE_SUFFIX = "Answer with Yes or No only."

YES = "Yes"
NO = "No"


class VerifierError(Exception):
    pass


@dataclass
class Verdict:
    assertion_id: str
    answer: str
    raw_response: str = ""
    degraded: bool = False


@dataclass
class VideoEvaluation:
    prompt_id: str
    video_id: str
    verdicts: list[Verdict]
    tc: int
    tc_score: float


@dataclass
class CategoryStats:
    tcr: float
    mean_tc_score: float
    videos: int


@dataclass
class ModelReport:
    model: str
    overall: CategoryStats
    per_category: dict[str, CategoryStats] = field(default_factory=dict)
    degraded_fraction: float = 0.0

    @property
    def m(self) -> int:
        return self.overall.videos


def parse_judge_answer(raw: str) -> str | None:
    """Case-insensitive yes/no from the first token, else None."""
    stripped = raw.strip()
    if not stripped:
        return None
    first = stripped.split()[0].strip(".,:;!?'\"()*").lower()
    if first == "yes":
        return YES
    if first == "no":
        return NO
    return None


def build_judge_prompt(question: str, n_frames: int, preamble: str = JUDGE_PREAMBLE) -> str:
    return f"{preamble.format(n=n_frames)}\n{question}\n{JUDGE_SUFFIX}"


def verify_assertion(
    assertion,
    seq: FrameSequence,
    vlm,
    model_name: str = "",
    cache: FileCache | None = None,
    preamble: str = JUDGE_PREAMBLE,
) -> Verdict:
    """Judge one assertion against its frame composite.

    The assertion's indices must already be valid for ``seq`` (remapped or
    resampled upstream).  Client failure after its retries, or an unparsable
    response after one reprompt, yields a fail-closed degraded No.
    """
    composite = compose_horizontal(seq, list(assertion.frame_indices))
    png = encode_png(composite.image)
    prompt = build_judge_prompt(assertion.question, len(composite.member_indices), preamble)
    key = content_key("verdict", frame_hash(composite.image), prompt, model_name)
    if cache is not None:
        hit = cache.get_json(key)
        if hit is not None:
            return Verdict(
                assertion_id=assertion.id,
                answer=hit["answer"],
                raw_response=hit["raw_response"],
                degraded=False,
            )

    for attempt in range(2):  # one reprompt for an unparsable response
        try:
            raw = vlm.judge(png, prompt)
        except ProviderError as exc:
            return Verdict(
                assertion_id=assertion.id, answer=NO, raw_response=str(exc), degraded=True
            )
        answer = parse_judge_answer(raw)
        if answer is not None:
            verdict = Verdict(assertion_id=assertion.id, answer=answer, raw_response=raw)
            if cache is not None:
                cache.put_json(key, {"answer": answer, "raw_response": raw})
            return verdict
    return Verdict(assertion_id=assertion.id, answer=NO, raw_response=raw, degraded=True)


# ---------------------------------------------------------------------------
# Scoring


def _verdicts_by_id(verdicts: list[Verdict]) -> dict[str, Verdict]:
    by_id: dict[str, Verdict] = {}
    for v in verdicts:
        if v.assertion_id in by_id:
            raise VerifierError(f"multiple verdicts for assertion {v.assertion_id}")
        by_id[v.assertion_id] = v
    return by_id


def compute_tc(verdicts: list[Verdict], assertions: AssertionSet) -> int:
    """1 only when every completion and consistency verdict is Yes."""
    by_id = _verdicts_by_id(verdicts)
    for a in assertions.in_scope():
        if a.id not in by_id:
            raise VerifierError(f"missing verdict for assertion {a.id}")
        if by_id[a.id].answer != YES:
            return 0
    return 1


def compute_tcr(tcs: list[int]) -> float:
    """Percentage of videos that completed their transition."""
    if not tcs:
        raise VerifierError("cannot compute a completion ratio over zero videos")
    return 100.0 * sum(tcs) / len(tcs)


def compute_tc_score_t2v(verdicts: list[Verdict], assertions: AssertionSet) -> float:
    """Pass rate over all assertions of all three dimensions."""
    if not assertions.assertions:
        raise VerifierError("assertion set is empty")
    by_id = _verdicts_by_id(verdicts)
    known = {a.id for a in assertions.assertions}
    extra = set(by_id) - known
    if extra:
        raise VerifierError(f"verdicts for unknown assertions: {sorted(extra)}")
    missing = known - set(by_id)
    if missing:
        raise VerifierError(f"missing verdicts for assertions: {sorted(missing)}")
    passed = sum(1 for a in assertions.assertions if by_id[a.id].answer == YES)
    return passed / len(assertions.assertions)


def evaluate_video(
    prompt_id: str, video_id: str, verdicts: list[Verdict], assertions: AssertionSet
) -> VideoEvaluation:
    return VideoEvaluation(
        prompt_id=prompt_id,
        video_id=video_id,
        verdicts=verdicts,
        tc=compute_tc(verdicts, assertions),
        tc_score=compute_tc_score_t2v(verdicts, assertions),
    )


def aggregate_report(
    evals: list[VideoEvaluation],
    categories: dict[str, str],
    model: str = "",
) -> ModelReport:
    """Per-category and overall stats; overall is the flat mean over all videos."""
    if not evals:
        raise VerifierError("no video evaluations to aggregate")
    for e in evals:
        if e.prompt_id not in categories:
            raise VerifierError(f"unknown prompt id {e.prompt_id!r}")

    def stats(group: list[VideoEvaluation]) -> CategoryStats:
        return CategoryStats(
            tcr=compute_tcr([e.tc for e in group]),
            mean_tc_score=sum(e.tc_score for e in group) / len(group),
            videos=len(group),
        )

    per_category: dict[str, CategoryStats] = {}
    for cat in sorted(set(categories[e.prompt_id] for e in evals)):
        group = [e for e in evals if categories[e.prompt_id] == cat]
        per_category[cat] = stats(group)
    total_verdicts = sum(len(e.verdicts) for e in evals)
    degraded = sum(1 for e in evals for v in e.verdicts if v.degraded)
    return ModelReport(
        model=model,
        overall=stats(evals),
        per_category=per_category,
        degraded_fraction=(degraded / total_verdicts) if total_verdicts else 0.0,
    )


# ---------------------------------------------------------------------------
# Persistence: verdicts as JSON-lines, report as JSON + CSV table.


def verdict_record(
    prompt_id: str, category: str, video_id: str, dimension: str, v: Verdict
) -> dict:
    return {
        "prompt_id": prompt_id,
        "category": category,
        "video_id": video_id,
        "assertion_id": v.assertion_id,
        "dimension": dimension,
        "answer": v.answer,
        "degraded": v.degraded,
        "raw_response": v.raw_response,
    }


def save_verdict_records(records: list[dict], path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")


def load_verdict_records(path: Path | str) -> list[dict]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(json.loads(line))
    return out


def report_to_dict(report: ModelReport, videos: list[VideoEvaluation] | None = None) -> dict:
    def cat_dict(s: CategoryStats) -> dict:
        return {"tcr": s.tcr, "mean_tc_score": s.mean_tc_score, "videos": s.videos}

    out = {
        "model": report.model,
        "overall": cat_dict(report.overall),
        "per_category": {c: cat_dict(s) for c, s in sorted(report.per_category.items())},
        "degraded_fraction": report.degraded_fraction,
    }
    if videos is not None:
        out["videos"] = [
            {
                "video_id": e.video_id,
                "prompt_id": e.prompt_id,
                "tc": e.tc,
                "tc_score": e.tc_score,
            }
            for e in sorted(videos, key=lambda e: e.video_id)
        ]
    return out


def report_to_csv(report: ModelReport) -> str:
    lines = ["model,category,videos,tcr,mean_tc_score"]
    for cat, s in sorted(report.per_category.items()):
        lines.append(f"{report.model},{cat},{s.videos},{s.tcr:.4f},{s.mean_tc_score:.6f}")
    o = report.overall
    lines.append(f"{report.model},overall,{o.videos},{o.tcr:.4f},{o.mean_tc_score:.6f}")
    return "\n".join(lines) + "\n"
