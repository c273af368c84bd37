"""Analysis utilities: attribute-existence curves, motion statistics, human
rating aggregation, and rank-correlation validation of metrics.

Rating aggregation mirrors the collection protocol: three annotators score
each video on two 5-point questions; videos whose ratings disagree beyond a
spread threshold are discarded as divisive, and the per-video means drive two
derived flags (completion when mean q1 > 3.66, consistency eligibility when
mean q1 >= 3.6).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .consistency import ConsistencyError, EmbeddingVector, FlowField, cosine_similarity

COMPLETION_THRESHOLD = 3.66
CONSISTENCY_MEAN_FLOOR = 3.6
DIVISIVE_SPREAD = 3
STATIC_FLOW_THRESHOLD = 1.0

CURVE_KINDS = ("start_caption", "end_caption", "consecutive")


class AnalysisError(Exception):
    pass


@dataclass(frozen=True)
class HumanRating:
    video_id: str
    annotator_id: str
    q1: int  # transition completion, 1..5
    q2: int  # overall text-video alignment, 1..5

    def __post_init__(self):
        for name, score in (("q1", self.q1), ("q2", self.q2)):
            if not (isinstance(score, int) and 1 <= score <= 5):
                raise AnalysisError(f"{name} must be an integer in 1..5, got {score!r}")


@dataclass
class CorrelationResult:
    spearman_rho: float
    kendall_tau: float
    n: int


@dataclass
class CurveSeries:
    """Per-frame-index mean similarity values for one curve kind."""

    values: list[float]
    kind: str

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise AnalysisError(f"unknown curve kind {self.kind!r}")
        for v in self.values:
            if not -1.0 - 1e-9 <= v <= 1.0 + 1e-9:
                raise AnalysisError(f"curve value {v} outside [-1, 1]")


@dataclass
class VideoRatingSummary:
    video_id: str
    mean_q1: float
    mean_q2: float
    n: int
    completion: bool
    consistency_eligible: bool


@dataclass
class RatingAggregate:
    videos: list[VideoRatingSummary]
    discarded: list[tuple[str, str]] = field(default_factory=list)

    def by_video(self) -> dict[str, VideoRatingSummary]:
        return {v.video_id: v for v in self.videos}


@dataclass
class DynamicsResult:
    value: float
    all_masked_frames: list[int]


# ---------------------------------------------------------------------------
# Rating aggregation


def aggregate_ratings(
    ratings: list[HumanRating],
    divisive_spread: int = DIVISIVE_SPREAD,
    mean_floor: float = CONSISTENCY_MEAN_FLOOR,
    completion_threshold: float = COMPLETION_THRESHOLD,
) -> RatingAggregate:
    """Per-video means with divisive videos removed.

    A video is divisive when max - min of its scores on either question
    reaches ``divisive_spread``.  Duplicate (video, annotator) pairs are an
    error.
    """
    seen: set[tuple[str, str]] = set()
    groups: dict[str, list[HumanRating]] = {}
    for r in ratings:
        pair = (r.video_id, r.annotator_id)
        if pair in seen:
            raise AnalysisError(f"duplicate rating for video {r.video_id!r} by {r.annotator_id!r}")
        seen.add(pair)
        groups.setdefault(r.video_id, []).append(r)

    videos: list[VideoRatingSummary] = []
    discarded: list[tuple[str, str]] = []
    for video_id in sorted(groups):
        rs = groups[video_id]
        q1s = [r.q1 for r in rs]
        q2s = [r.q2 for r in rs]
        divisive = [
            q for q, scores in (("q1", q1s), ("q2", q2s))
            if max(scores) - min(scores) >= divisive_spread
        ]
        if divisive:
            discarded.append((video_id, f"divisive {'+'.join(divisive)} ratings"))
            continue
        mean_q1 = sum(q1s) / len(q1s)
        mean_q2 = sum(q2s) / len(q2s)
        videos.append(
            VideoRatingSummary(
                video_id=video_id,
                mean_q1=mean_q1,
                mean_q2=mean_q2,
                n=len(rs),
                completion=mean_q1 > completion_threshold,
                consistency_eligible=mean_q1 >= mean_floor,
            )
        )
    return RatingAggregate(videos=videos, discarded=discarded)


# ---------------------------------------------------------------------------
# Rank correlation


def rank_correlation(metric_scores: list[float], human_scores: list[float]) -> CorrelationResult:
    """Spearman rho (average ranks for ties) and tie-corrected Kendall tau-b."""
    if len(metric_scores) != len(human_scores):
        raise AnalysisError(
            f"paired lists differ in length: {len(metric_scores)} vs {len(human_scores)}"
        )
    if len(metric_scores) < 2:
        raise AnalysisError("need at least 2 paired samples")
    for name, xs in (("metric", metric_scores), ("human", human_scores)):
        if len(set(xs)) < 2:
            raise AnalysisError(f"{name} scores have zero variance; correlation undefined")
    rho = stats.spearmanr(metric_scores, human_scores).statistic
    tau = stats.kendalltau(metric_scores, human_scores).statistic
    return CorrelationResult(
        spearman_rho=float(rho), kendall_tau=float(tau), n=len(metric_scores)
    )


def inter_annotator_correlation(
    ratings: list[HumanRating], question: str = "q1"
) -> CorrelationResult:
    """Average pairwise rank correlation between annotators over shared videos.

    Pairs sharing fewer than 2 videos, or whose shared scores have zero
    variance, are skipped; at least one usable pair is required.
    """
    if question not in ("q1", "q2"):
        raise AnalysisError(f"question must be q1 or q2, got {question!r}")
    per_annotator: dict[str, dict[str, int]] = {}
    for r in ratings:
        per_annotator.setdefault(r.annotator_id, {})[r.video_id] = getattr(r, question)

    annotators = sorted(per_annotator)
    rhos, taus, total = [], [], 0
    for i in range(len(annotators)):
        for j in range(i + 1, len(annotators)):
            a, b = per_annotator[annotators[i]], per_annotator[annotators[j]]
            common = sorted(set(a) & set(b))
            if len(common) < 2:
                continue
            xs = [a[v] for v in common]
            ys = [b[v] for v in common]
            try:
                res = rank_correlation([float(x) for x in xs], [float(y) for y in ys])
            except AnalysisError:
                continue  # zero variance on this pair's shared videos
            rhos.append(res.spearman_rho)
            taus.append(res.kendall_tau)
            total += len(common)
    if not rhos:
        raise AnalysisError("no annotator pair shares enough rateable videos")
    return CorrelationResult(
        spearman_rho=sum(rhos) / len(rhos), kendall_tau=sum(taus) / len(taus), n=total
    )


# ---------------------------------------------------------------------------
# Attribute-existence and consistency curves


def caption_pair(prompt) -> tuple[str, str]:
    """Start/end probe captions, e.g. "a pink chameleon" / "a green chameleon"."""
    return (
        f"a {prompt.start_value} {prompt.transition_object}",
        f"a {prompt.end_value} {prompt.transition_object}",
    )


def attribute_curves(
    prompt, embeds: list[EmbeddingVector], provider
) -> tuple[CurveSeries, CurveSeries]:
    """Similarity of every frame to the start and end attribute captions."""
    if prompt.category != "attribute":
        raise AnalysisError(f"prompt {prompt.id!r} is {prompt.category}, not attribute")
    if not embeds:
        raise AnalysisError("no frame embeddings")
    start_text, end_text = caption_pair(prompt)
    text_vecs = np.asarray(provider.embed_texts([start_text, end_text]), dtype=np.float64)
    start_e = EmbeddingVector(values=text_vecs[0], model_fingerprint=embeds[0].model_fingerprint)
    end_e = EmbeddingVector(values=text_vecs[1], model_fingerprint=embeds[0].model_fingerprint)
    start_curve = [cosine_similarity(e, start_e) for e in embeds]
    end_curve = [cosine_similarity(e, end_e) for e in embeds]
    return (
        CurveSeries(values=start_curve, kind="start_caption"),
        CurveSeries(values=end_curve, kind="end_caption"),
    )


def consecutive_curve(embeds: list[EmbeddingVector]) -> CurveSeries:
    if len(embeds) < 2:
        raise AnalysisError("need at least 2 frames for a consecutive curve")
    values = [cosine_similarity(embeds[k], embeds[k + 1]) for k in range(len(embeds) - 1)]
    return CurveSeries(values=values, kind="consecutive")


def mean_curves(series: list[CurveSeries]) -> CurveSeries:
    if not series:
        raise AnalysisError("no curves to average")
    kind = series[0].kind
    length = len(series[0].values)
    for s in series:
        if s.kind != kind or len(s.values) != length:
            raise AnalysisError("curves must share kind and length to be averaged")
    stacked = np.asarray([s.values for s in series])
    return CurveSeries(values=[float(v) for v in stacked.mean(axis=0)], kind=kind)


def curve_trend(series: CurveSeries) -> int:
    """Sign of (last - first): +1 net-increasing, -1 net-decreasing, 0 flat."""
    delta = series.values[-1] - series.values[0]
    return (delta > 0) - (delta < 0)


# ---------------------------------------------------------------------------
# Dynamics degree


def dynamics_degree(
    flows: list[FlowField], static_threshold: float = STATIC_FLOW_THRESHOLD
) -> DynamicsResult:
    """Mean flow magnitude over moving pixels, averaged across frames.

    Pixels with magnitude <= threshold count as static background and are
    masked out per frame; a frame with no moving pixels contributes 0 and is
    flagged by 1-based index.
    """
    if not flows:
        raise ConsistencyError("empty flow list")
    per_frame = []
    all_masked = []
    for k, flow in enumerate(flows, start=1):
        mag = np.sqrt(flow.u * flow.u + flow.v * flow.v)
        moving = mag[mag > static_threshold]
        if moving.size == 0:
            per_frame.append(0.0)
            all_masked.append(k)
        else:
            per_frame.append(float(moving.mean()))
    return DynamicsResult(value=sum(per_frame) / len(per_frame), all_masked_frames=all_masked)


# ---------------------------------------------------------------------------
# CSV / report plumbing

RATINGS_HEADER = ["video_id", "annotator_id", "q1", "q2"]


def write_ratings_csv(ratings: list[HumanRating], path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(RATINGS_HEADER)
        for r in sorted(ratings, key=lambda r: (r.video_id, r.annotator_id)):
            writer.writerow([r.video_id, r.annotator_id, r.q1, r.q2])


def read_ratings_csv(path: Path | str) -> list[HumanRating]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != RATINGS_HEADER:
            raise AnalysisError(
                f"ratings CSV must start with header {','.join(RATINGS_HEADER)}"
            )
        out = []
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append(
                    HumanRating(
                        video_id=row["video_id"],
                        annotator_id=row["annotator_id"],
                        q1=int(row["q1"]),
                        q2=int(row["q2"]),
                    )
                )
            except (TypeError, ValueError, AnalysisError) as exc:
                raise AnalysisError(f"ratings CSV line {lineno}: {exc}")
    return out


def write_curves_csv(series: list[CurveSeries], path: Path | str) -> None:
    """Long-format CSV: one row per (series, 1-based index, value)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["series", "index", "value"])
        for s in series:
            for i, v in enumerate(s.values, start=1):
                writer.writerow([s.kind, i, repr(v)])


def correlation_grid(
    metric_scores: dict[str, float],
    ratings: list[HumanRating],
    divisive_spread: int = DIVISIVE_SPREAD,
) -> dict:
    """Correlate one metric against mean q1 and mean q2 over shared videos."""
    agg = aggregate_ratings(ratings, divisive_spread=divisive_spread)
    by_video = agg.by_video()
    shared = sorted(set(metric_scores) & set(by_video))
    if len(shared) < 2:
        raise AnalysisError(
            f"only {len(shared)} videos shared between metric scores and ratings"
        )
    xs = [metric_scores[v] for v in shared]
    grid: dict = {"n": len(shared), "discarded": len(agg.discarded)}
    for question in ("q1", "q2"):
        ys = [getattr(by_video[v], f"mean_{question}") for v in shared]
        res = rank_correlation(xs, ys)
        grid[question] = {"spearman_rho": res.spearman_rho, "kendall_tau": res.kendall_tau}
    return grid
