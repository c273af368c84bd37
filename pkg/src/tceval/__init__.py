"""Evaluation harness for temporal transition completion in generated videos.

The library measures whether a generated video actually performs the scene
transition its prompt describes: assertion questions are generated per
prompt, judged frame-by-frame by a vision-language model, and aggregated into
completion metrics, with embedding- and flow-based consistency measures and
rank-correlation validation against human ratings.
"""

from .analysis import (
    CorrelationResult,
    CurveSeries,
    HumanRating,
    aggregate_ratings,
    attribute_curves,
    dynamics_degree,
    inter_annotator_correlation,
    rank_correlation,
)
from .assertions import (
    Assertion,
    AssertionSet,
    generate_assertions,
    parse_assertion_text,
    render_assertion_text,
)
from .consistency import (
    ConsistencyScore,
    EmbeddingVector,
    FlowField,
    Trajectory,
    ate,
    consecutive_consistency,
    cosine_similarity,
    embed_frames,
    epe,
    framewise_consistency,
    map_similarity,
    tc_score_i2v,
)
from .corpus import (
    CorpusManifest,
    GroundTruthMeta,
    SceneState,
    TransitionPrompt,
    load_corpus,
    make_prompt,
    save_corpus,
    synthesize_prompts,
)
from .verifier import (
    ModelReport,
    Verdict,
    VideoEvaluation,
    aggregate_report,
    compute_tc,
    compute_tc_score_t2v,
    compute_tcr,
    verify_assertion,
)
from .video_io import (
    FrameComposite,
    FrameSequence,
    compose_horizontal,
    equal_gap_indices,
    extract_frames,
    remap_index,
    resample_equal_gaps,
)

__version__ = "0.1.0"

__all__ = [
    "Assertion",
    "AssertionSet",
    "ConsistencyScore",
    "CorrelationResult",
    "CorpusManifest",
    "CurveSeries",
    "EmbeddingVector",
    "FlowField",
    "FrameComposite",
    "FrameSequence",
    "GroundTruthMeta",
    "HumanRating",
    "ModelReport",
    "SceneState",
    "Trajectory",
    "TransitionPrompt",
    "Verdict",
    "VideoEvaluation",
    "aggregate_ratings",
    "aggregate_report",
    "ate",
    "attribute_curves",
    "compose_horizontal",
    "compute_tc",
    "compute_tc_score_t2v",
    "compute_tcr",
    "consecutive_consistency",
    "cosine_similarity",
    "dynamics_degree",
    "embed_frames",
    "epe",
    "equal_gap_indices",
    "extract_frames",
    "framewise_consistency",
    "generate_assertions",
    "inter_annotator_correlation",
    "load_corpus",
    "make_prompt",
    "map_similarity",
    "parse_assertion_text",
    "rank_correlation",
    "remap_index",
    "render_assertion_text",
    "resample_equal_gaps",
    "save_corpus",
    "synthesize_prompts",
    "tc_score_i2v",
    "verify_assertion",
]
