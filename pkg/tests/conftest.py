from __future__ import annotations

import numpy as np
import pytest

from tceval.assertions import EXEMPLARS
from tceval.corpus import CorpusManifest, GroundTruthMeta, make_prompt
from tceval.providers import ScriptedResponses, ScriptedTextClient, ScriptedVisionClient
from tceval.video_io import FrameSequence


def solid_frame(rgb: tuple[int, int, int], width: int = 64, height: int = 48) -> np.ndarray:
    frame = np.zeros((height, width, 3), dtype=np.uint8)
    frame[:, :] = rgb
    return frame


def gradient_sequence(
    n: int = 16, width: int = 64, height: int = 48, source_id: str = "toy", seed: int = 0
) -> FrameSequence:
    """n visually distinct frames (deterministic), for composites and caches."""
    frames = []
    for i in range(n):
        base = (17 * (i + seed)) % 200
        frames.append(solid_frame((base, (base + 60) % 255, (base + 120) % 255), width, height))
    return FrameSequence(frames=frames, fps=8.0, source_id=source_id)


@pytest.fixture
def chameleon_prompt():
    return make_prompt(
        id="chameleon-01",
        category="attribute",
        text="A chameleon changing from brown to bright green.",
        transition_object="chameleon",
        start_value="brown",
        end_value="bright green",
    )


@pytest.fixture
def ball_prompt():
    return make_prompt(
        id="ball-01",
        category="object_relation",
        text="A man passing a ball from his left hand to his right hand.",
        transition_object="ball",
        start_value="left hand",
        end_value="right hand",
    )


@pytest.fixture
def bench_prompt():
    return make_prompt(
        id="bench-01",
        category="background",
        text="A bench by a lake from foggy morning to sunny afternoon.",
        transition_object="background",
        start_value="foggy morning",
        end_value="sunny afternoon",
        distractors=("bench", "lake"),
    )


@pytest.fixture
def toy_manifest(chameleon_prompt, ball_prompt, bench_prompt):
    return CorpusManifest(
        name="T2V", prompts=[chameleon_prompt, ball_prompt, bench_prompt]
    )


@pytest.fixture
def toy_i2v_manifest(chameleon_prompt, ball_prompt, bench_prompt):
    prompts = [chameleon_prompt, ball_prompt, bench_prompt]
    gt = [
        GroundTruthMeta(prompt_id=p.id, video_source_id=f"yt-{p.id}", start_time=3.0, end_time=9.5)
        for p in prompts
    ]
    return CorpusManifest(name="I2V", prompts=prompts, ground_truth=gt)


@pytest.fixture
def exemplar_llm():
    """Scripted generator that answers each exemplar prompt with its worked layout."""
    rules = [(prompt_text, body) for prompt_text, body in EXEMPLARS]
    return ScriptedTextClient(ScriptedResponses(rules=rules))


def scripted_judge(no_questions: tuple[str, ...] = ()) -> ScriptedVisionClient:
    """Judge answering No for listed question substrings, Yes otherwise."""
    rules = [(q, "No") for q in no_questions]
    return ScriptedVisionClient(ScriptedResponses(rules=rules, default="Yes"))
