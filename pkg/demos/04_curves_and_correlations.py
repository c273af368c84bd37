"""
Attribute curves, dynamics degree, and metric validation
========================================================

Two analyses diagnose *why* a video scores the way it does: per-frame
similarity to the start/end attribute captions (does the old attribute fade
and the new one emerge?), and the mean flow magnitude over moving pixels.
Metric quality itself is validated by rank correlation against human ratings.
"""

import numpy as np

from tceval.analysis import (
    HumanRating,
    aggregate_ratings,
    attribute_curves,
    caption_pair,
    curve_trend,
    dynamics_degree,
    inter_annotator_correlation,
    rank_correlation,
)
from tceval.consistency import FlowField, embed_frames
from tceval.corpus import make_prompt
from tceval.providers import MockEmbeddingProvider
from tceval.video_io import FrameSequence

# --- attribute-existence curves ----------------------------------------------
prompt = make_prompt(
    id="chameleon-02",
    category="attribute",
    text="a pink chameleon turns green",
    transition_object="chameleon",
    start_value="pink",
    end_value="green",
)
print("probe captions:", caption_pair(prompt))

frames = [np.full((48, 64, 3), 5 * i, np.uint8) for i in range(16)]
seq = FrameSequence(frames=frames, fps=8.0, source_id="demo")
provider = MockEmbeddingProvider()
start_curve, end_curve = attribute_curves(prompt, embed_frames(seq, provider), provider)
print("start-caption trend (sign of last-first):", curve_trend(start_curve))
print("end-caption   trend (sign of last-first):", curve_trend(end_curve))

# --- dynamics degree ----------------------------------------------------------
# Static background pixels (magnitude <= threshold) are masked per frame; the
# value is the mean magnitude over what still moves.
u = np.zeros((32, 32))
u[:, :16] = 4.0  # left half moves, right half is static
res = dynamics_degree([FlowField(u=u, v=np.zeros_like(u))], static_threshold=1.0)
print("\ndynamics degree:", res.value, "(fully-masked frames:", res.all_masked_frames, ")")

# --- human-rating aggregation and rank correlation ----------------------------
ratings = []
rng = np.random.default_rng(1)
metric_scores = {}
for i in range(12):
    vid = f"video-{i:02d}"
    quality = i / 11
    metric_scores[vid] = quality
    base = 1 + round(4 * quality)
    for ann in ("ann-1", "ann-2", "ann-3"):
        jitter = int(rng.integers(-1, 2))
        ratings.append(HumanRating(vid, ann, int(np.clip(base + jitter, 1, 5)), base))

agg = aggregate_ratings(ratings)
print(f"\n{len(agg.videos)} videos kept, {len(agg.discarded)} discarded as divisive")
kept = {v.video_id: v.mean_q1 for v in agg.videos}
paired = sorted(set(kept) & set(metric_scores))
res = rank_correlation([metric_scores[v] for v in paired], [kept[v] for v in paired])
print(f"metric vs mean q1: rho={res.spearman_rho:.4f} tau={res.kendall_tau:.4f} (n={res.n})")

upper = inter_annotator_correlation(ratings, question="q1")
print(f"inter-annotator upper bound: rho={upper.spearman_rho:.4f} "
      f"tau={upper.kendall_tau:.4f}")
