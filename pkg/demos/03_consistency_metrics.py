"""
Frame consistency: embedding similarity, the clamped map, and flow errors
=========================================================================

Image-conditioned generators can fake assertion passes with incoherent
intermediate frames, so their score blends the assertion pass rate with a
frame-consistency term.  Raw cosine similarities live in a narrow band; a
clamped linear map spreads [0.90, 0.98] onto [0, 1] before averaging.
"""

import numpy as np

from tceval.consistency import (
    FlowField,
    Trajectory,
    ate,
    consecutive_consistency,
    embed_frames,
    epe,
    map_similarity,
    tc_score_i2v,
)
from tceval.providers import MockEmbeddingProvider
from tceval.video_io import FrameSequence

# --- the similarity map ------------------------------------------------------
for s in (0.85, 0.90, 0.92, 0.94, 0.98, 0.995):
    print(f"raw {s:0.3f} -> mapped {map_similarity(s):0.3f}")

# --- consecutive-frame consistency ------------------------------------------
# A deterministic mock provider embeds frames offline; swap in the HTTP or
# local encoder backend via the config for real runs.
frames = [np.full((48, 64, 3), 10 * i, np.uint8) for i in range(16)]
seq = FrameSequence(frames=frames, fps=8.0, source_id="demo")
embeds = embed_frames(seq, MockEmbeddingProvider())
score = consecutive_consistency(embeds)
print("\nmean mapped consecutive similarity:", round(score.mean_mapped, 4))

# The image-conditioned score weights pass rate 2:1 over consistency, since
# consistency is one of three evaluation dimensions.
print("weighted score (pass rate 0.75):",
      round(tc_score_i2v(0.75, score), 4))

# --- flow endpoint error and trajectory error --------------------------------
# Flow fields and tracked points come from external estimators as files; the
# harness owns only the error math.  Both are plain means of Euclidean
# distances, so identical inputs give exactly zero and a (3,4) displacement
# against zero gives exactly 5.
rng = np.random.default_rng(0)
gen_flows = [FlowField(u=rng.normal(0, 2, (32, 32)), v=rng.normal(0, 2, (32, 32)))
             for _ in range(15)]
ref_flows = [FlowField(u=f.u + rng.normal(0, 0.5, f.u.shape),
                       v=f.v + rng.normal(0, 0.5, f.v.shape)) for f in gen_flows]
print("\nEPE vs itself:", epe(gen_flows, gen_flows))
print("EPE vs perturbed reference:", round(epe(gen_flows, ref_flows), 4))

points = Trajectory(positions=rng.uniform(0, 100, (1024, 16, 2)))
drifted = Trajectory(positions=points.positions + rng.normal(0, 1, points.positions.shape))
print("ATE vs drifted reference:", round(ate(points, drifted), 4))
