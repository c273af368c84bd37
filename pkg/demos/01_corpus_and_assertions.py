"""
Building a transition corpus and generating assertions
=======================================================

A benchmark case is a prompt describing a single scene transition: an
attribute changing, an object switching interaction partners, or a background
shifting behind static foreground objects.  This script builds a tiny corpus,
round-trips it through the JSON-lines format, and expands one prompt into
frame-indexed yes/no assertions with a scripted (offline) generator.
"""

import tempfile
from pathlib import Path

from tceval.assertions import EXEMPLARS, generate_assertions, render_assertion_text
from tceval.corpus import CorpusManifest, load_corpus, make_prompt, save_corpus
from tceval.providers import ScriptedResponses, ScriptedTextClient

# Three prompts, one per transition category.  make_prompt builds the minimal
# scene-graph pair for each: the start state binds the transition object to
# its start value, the end state to its end value.
prompts = [
    make_prompt(
        id="chameleon-01",
        category="attribute",
        text="A chameleon changing from brown to bright green.",
        transition_object="chameleon",
        start_value="brown",
        end_value="bright green",
    ),
    make_prompt(
        id="ball-01",
        category="object_relation",
        text="A man passing a ball from his left hand to his right hand.",
        transition_object="ball",
        start_value="left hand",
        end_value="right hand",
    ),
    make_prompt(
        id="bench-01",
        category="background",
        text="A bench by a lake from foggy morning to sunny afternoon.",
        transition_object="background",
        start_value="foggy morning",
        end_value="sunny afternoon",
        distractors=("bench", "lake"),
    ),
]

workdir = Path(tempfile.mkdtemp(prefix="tceval-demo-"))
corpus_path = workdir / "corpus.jsonl"
save_corpus(CorpusManifest(name="T2V", prompts=prompts), corpus_path)

# Loading re-validates every invariant: scene-graph consistency, the
# category predicates, unique ids, and that the text names both states.
manifest = load_corpus(corpus_path, schema="T2V")
print("category counts:", manifest.category_counts())

# Assertion generation is few-shot against a chat client.  Offline we script
# the client with the worked examples themselves; in production the same call
# goes to an HTTP endpoint configured in the TOML config.
llm = ScriptedTextClient(
    ScriptedResponses(rules=[(text, body) for text, body in EXEMPLARS])
)
aset, raw = generate_assertions(manifest.prompts[0], llm, model_name="demo")

print(f"\n{len(aset.assertions)} assertions for {aset.prompt_id}:")
for a in aset.assertions:
    frames = ", ".join(str(i) for i in a.frame_indices)
    print(f"  [{a.dimension:<11}] frames {frames:<14} {a.question}")

# The canonical text layout round-trips through the parser, which is what
# makes cached generations auditable.
print("\ncanonical layout:")
print(render_assertion_text(aset))
