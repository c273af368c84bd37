"""Benchmark corpus: transition prompts, scene graphs, and ground-truth video metadata.

A corpus is a JSON-lines file (one prompt record per line) with a sidecar
``*.meta.json`` carrying the corpus name and version.  Prompts describe a
single scene transition between a start and an end scene graph and fall into
one of three categories: an attribute change on the transition object, a
change of the object it interacts with, or a background shift behind one or
more static distractor objects.
"""

from __future__ import annotations

import json
import re
import uuid
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterable

CATEGORIES = ("attribute", "object_relation", "background")
MANIFEST_KINDS = ("T2V", "I2V")

MAX_GROUND_TRUTH_SECONDS = 20.0


class CorpusError(Exception):
    pass


class CorpusParseError(CorpusError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class CorpusValidationError(CorpusError):
    def __init__(self, message: str, prompt_id: str | None = None):
        self.prompt_id = prompt_id
        super().__init__(f"prompt {prompt_id!r}: {message}" if prompt_id else message)


@dataclass(frozen=True)
class SceneState:
    """A scene graph at one point in time.

    ``attributes`` holds (object, attribute) bindings and ``relations`` holds
    directed (subject, object) interaction edges; every endpoint must name an
    entry of ``objects``.
    """

    objects: tuple[str, ...]
    attributes: tuple[tuple[str, str], ...] = ()
    relations: tuple[tuple[str, str], ...] = ()

    def problems(self) -> list[str]:
        errs = []
        if not self.objects:
            errs.append("scene state has no objects")
        if not self.attributes and not self.relations:
            errs.append("scene state has neither attribute bindings nor relations")
        if len(set(self.objects)) != len(self.objects):
            errs.append("duplicate object labels")
        if len(set(self.attributes)) != len(self.attributes):
            errs.append("duplicate attribute bindings")
        if len(set(self.relations)) != len(self.relations):
            errs.append("duplicate relation edges")
        known = set(self.objects)
        for obj, _attr in self.attributes:
            if obj not in known:
                errs.append(f"attribute binding names unknown object {obj!r}")
        for a, b in self.relations:
            for end in (a, b):
                if end not in known:
                    errs.append(f"relation edge names unknown object {end!r}")
        return errs


@dataclass(frozen=True)
class TransitionPrompt:
    id: str
    category: str
    text: str
    start_state: SceneState
    end_state: SceneState
    transition_object: str
    start_value: str
    end_value: str
    distractors: tuple[str, ...] = ()


@dataclass(frozen=True)
class GroundTruthMeta:
    """External video reference: source id plus the clip time range in seconds."""

    prompt_id: str
    video_source_id: str
    start_time: float
    end_time: float

    def problems(self) -> list[str]:
        errs = []
        if self.start_time < 0:
            errs.append("start_time is negative")
        if self.end_time <= self.start_time:
            errs.append("end_time must exceed start_time")
        elif self.end_time - self.start_time >= MAX_GROUND_TRUTH_SECONDS:
            errs.append(f"clip longer than {MAX_GROUND_TRUTH_SECONDS:g} s")
        return errs


@dataclass
class CorpusManifest:
    name: str
    prompts: list[TransitionPrompt] = field(default_factory=list)
    ground_truth: list[GroundTruthMeta] = field(default_factory=list)

    def category_counts(self) -> dict[str, int]:
        counts = {c: 0 for c in CATEGORIES}
        for p in self.prompts:
            counts[p.category] = counts.get(p.category, 0) + 1
        return counts

    def ground_truth_by_prompt(self) -> dict[str, GroundTruthMeta]:
        return {g.prompt_id: g for g in self.ground_truth}


# ---------------------------------------------------------------------------
# Category predicates: which single-change pattern the two scene graphs show.


def _attribute_delta(p: TransitionPrompt) -> bool:
    """Exactly one attribute binding flips on the named object; all else equal."""
    s, e = p.start_state, p.end_state
    if set(s.objects) != set(e.objects) or set(s.relations) != set(e.relations):
        return False
    removed = set(s.attributes) - set(e.attributes)
    added = set(e.attributes) - set(s.attributes)
    return removed == {(p.transition_object, p.start_value)} and added == {
        (p.transition_object, p.end_value)
    }


def is_attribute_transition(p: TransitionPrompt) -> bool:
    return _attribute_delta(p) and not p.distractors


def is_relation_transition(p: TransitionPrompt) -> bool:
    s, e = p.start_state, p.end_state
    if set(s.objects) != set(e.objects) or set(s.attributes) != set(e.attributes):
        return False
    removed = set(s.relations) - set(e.relations)
    added = set(e.relations) - set(s.relations)
    return removed == {(p.transition_object, p.start_value)} and added == {
        (p.transition_object, p.end_value)
    }


def is_background_transition(p: TransitionPrompt) -> bool:
    return _attribute_delta(p) and bool(p.distractors)


CATEGORY_PREDICATES = {
    "attribute": is_attribute_transition,
    "object_relation": is_relation_transition,
    "background": is_background_transition,
}


def validate_prompt(p: TransitionPrompt) -> None:
    """Raise CorpusValidationError unless the prompt satisfies all invariants."""
    errs: list[str] = []
    if p.category not in CATEGORIES:
        errs.append(f"unknown category {p.category!r}")
    if not p.text.strip():
        errs.append("empty prompt text")
    for label, state in (("start", p.start_state), ("end", p.end_state)):
        errs.extend(f"{label} state: {msg}" for msg in state.problems())
    if not errs:
        matches = [c for c, pred in CATEGORY_PREDICATES.items() if pred(p)]
        if matches != [p.category]:
            errs.append(
                f"scene-graph difference matches {matches or 'no category'}, "
                f"declared {p.category!r}"
            )
        if p.category == "background":
            missing = [d for d in p.distractors if d not in p.start_state.objects]
            if missing:
                errs.append(f"distractors not present in scene: {missing}")
        text = p.text.lower()
        for value in (p.start_value, p.end_value):
            if value.lower() not in text:
                errs.append(f"prompt text does not mention {value!r}")
    if errs:
        raise CorpusValidationError("; ".join(errs), prompt_id=p.id)


def build_states(
    category: str,
    transition_object: str,
    start_value: str,
    end_value: str,
    distractors: Iterable[str] = (),
) -> tuple[SceneState, SceneState]:
    """Minimal canonical scene-graph pair for one transition."""
    distractors = tuple(distractors)
    if category == "attribute":
        objs = (transition_object,)
        start = SceneState(objs, attributes=((transition_object, start_value),))
        end = SceneState(objs, attributes=((transition_object, end_value),))
    elif category == "object_relation":
        objs = (transition_object, start_value, end_value)
        start = SceneState(objs, relations=((transition_object, start_value),))
        end = SceneState(objs, relations=((transition_object, end_value),))
    elif category == "background":
        objs = (transition_object,) + distractors
        start = SceneState(objs, attributes=((transition_object, start_value),))
        end = SceneState(objs, attributes=((transition_object, end_value),))
    else:
        raise CorpusError(f"unknown category {category!r}")
    return start, end


def make_prompt(
    id: str,
    category: str,
    text: str,
    transition_object: str,
    start_value: str,
    end_value: str,
    distractors: Iterable[str] = (),
) -> TransitionPrompt:
    """Convenience constructor using the canonical scene-graph shape."""
    start, end = build_states(category, transition_object, start_value, end_value, distractors)
    return TransitionPrompt(
        id=id,
        category=category,
        text=text,
        start_state=start,
        end_state=end,
        transition_object=transition_object,
        start_value=start_value,
        end_value=end_value,
        distractors=tuple(distractors),
    )


# ---------------------------------------------------------------------------
# Serialization


def _state_to_dict(s: SceneState) -> dict:
    return {
        "objects": list(s.objects),
        "attributes": [list(b) for b in s.attributes],
        "relations": [list(r) for r in s.relations],
    }


def _state_from_dict(d: dict) -> SceneState:
    return SceneState(
        objects=tuple(d.get("objects", ())),
        attributes=tuple((str(o), str(a)) for o, a in d.get("attributes", ())),
        relations=tuple((str(a), str(b)) for a, b in d.get("relations", ())),
    )


def prompt_to_record(p: TransitionPrompt, gt: GroundTruthMeta | None = None) -> dict:
    rec = {
        "id": p.id,
        "category": p.category,
        "text": p.text,
        "start_state": _state_to_dict(p.start_state),
        "end_state": _state_to_dict(p.end_state),
        "transition_object": p.transition_object,
        "start_value": p.start_value,
        "end_value": p.end_value,
        "distractors": list(p.distractors),
    }
    if gt is not None:
        rec["ground_truth"] = {
            "video_source_id": gt.video_source_id,
            "start_time": gt.start_time,
            "end_time": gt.end_time,
        }
    return rec


def prompt_from_record(rec: dict) -> tuple[TransitionPrompt, GroundTruthMeta | None]:
    required = (
        "id",
        "category",
        "text",
        "start_state",
        "end_state",
        "transition_object",
        "start_value",
        "end_value",
    )
    missing = [k for k in required if k not in rec]
    if missing:
        raise CorpusParseError(f"record missing fields {missing}")
    prompt = TransitionPrompt(
        id=str(rec["id"]),
        category=str(rec["category"]),
        text=str(rec["text"]),
        start_state=_state_from_dict(rec["start_state"]),
        end_state=_state_from_dict(rec["end_state"]),
        transition_object=str(rec["transition_object"]),
        start_value=str(rec["start_value"]),
        end_value=str(rec["end_value"]),
        distractors=tuple(str(d) for d in rec.get("distractors", ())),
    )
    gt = None
    if "ground_truth" in rec and rec["ground_truth"] is not None:
        g = rec["ground_truth"]
        try:
            gt = GroundTruthMeta(
                prompt_id=prompt.id,
                video_source_id=str(g["video_source_id"]),
                start_time=float(g["start_time"]),
                end_time=float(g["end_time"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusParseError(f"bad ground_truth sub-record: {exc}")
    return prompt, gt


def sidecar_path(path: Path) -> Path:
    return path.with_name(path.stem + ".meta.json")


def save_corpus(manifest: CorpusManifest, path: Path | str, version: str = "1") -> None:
    path = Path(path)
    gt_map = manifest.ground_truth_by_prompt()
    lines = [
        json.dumps(prompt_to_record(p, gt_map.get(p.id)), sort_keys=True, ensure_ascii=False)
        for p in manifest.prompts
    ]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    meta = {"name": manifest.name, "version": version, "prompts": len(manifest.prompts)}
    sidecar_path(path).write_text(
        json.dumps(meta, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8"
    )


def load_corpus(path: Path | str, schema: str = "T2V") -> CorpusManifest:
    """Load and validate a corpus manifest.

    ``schema`` selects the manifest kind: "I2V" requires exactly one
    ground-truth record per prompt; "T2V" forbids none but requires nothing.
    Exact duplicate records are dropped; conflicting records with the same id
    are an error.
    """
    if schema not in MANIFEST_KINDS:
        raise CorpusError(f"unknown manifest kind {schema!r}")
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus file not found: {path}")

    sidecar = sidecar_path(path)
    if sidecar.exists():
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
        if meta.get("name") not in (None, schema):
            raise CorpusValidationError(
                f"manifest declares kind {meta.get('name')!r}, expected {schema!r}"
            )

    prompts: list[TransitionPrompt] = []
    ground_truth: list[GroundTruthMeta] = []
    seen: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusParseError(f"malformed JSON ({exc.msg})", line=lineno)
        try:
            prompt, gt = prompt_from_record(rec)
        except CorpusParseError as exc:
            raise CorpusParseError(str(exc), line=lineno)
        canonical = json.dumps(rec, sort_keys=True)
        if prompt.id in seen:
            if seen[prompt.id] == canonical:
                continue  # exact duplicate line: drop
            raise CorpusValidationError(
                "duplicate id with conflicting content", prompt_id=prompt.id
            )
        seen[prompt.id] = canonical
        prompts.append(prompt)
        if gt is not None:
            ground_truth.append(gt)

    if not prompts:
        raise CorpusValidationError("empty corpus")

    for p in prompts:
        validate_prompt(p)
    for g in ground_truth:
        errs = g.problems()
        if errs:
            raise CorpusValidationError("; ".join(errs), prompt_id=g.prompt_id)

    if schema == "I2V":
        gt_ids = [g.prompt_id for g in ground_truth]
        if len(gt_ids) != len(set(gt_ids)):
            raise CorpusValidationError("multiple ground-truth records for one prompt")
        missing = [p.id for p in prompts if p.id not in set(gt_ids)]
        if missing:
            raise CorpusValidationError(
                f"missing ground truth for prompts {missing}", prompt_id=missing[0]
            )

    return CorpusManifest(name=schema, prompts=prompts, ground_truth=ground_truth)


# ---------------------------------------------------------------------------
# Prompt synthesis


INSTRUCTION_TEMPLATES = {
    "attribute": (
        "Generate some concise prompts that describe scenarios where an object's "
        "attribute, such as lighting, color, material, shape, or texture, changes "
        "as time proceeds. The prompt should describe transitions that could happen "
        "within a few seconds in a video. The described transition should also be "
        "realistic and could happen in the real world. Here are some examples:"
    ),
    "object_relation": (
        "Generate some concise prompts that describe scenarios where objects' "
        "binding relations change due to some actions or motions. Two objects are "
        "bound to each other if they are physically interacting with each other. "
        'For example, in "a man passes a ball from left hand to right hand" the '
        "ball is bound to the man's left hand at first. Then, the binding relation "
        "changes from ball and left hand to ball and right hand. The prompt should "
        "describe motions that could happen within a few seconds in a video. "
        "Consider a wide range of subjects not limited to humans or one's "
        "occupation, such as animals or common objects. Here are more examples:"
    ),
    "background": (
        "Generate some concise prompts that describe scenarios where a foreground "
        "object remains relatively static and the background changes as time "
        "proceeds. The prompt should describe transitions that could happen within "
        "a few seconds in a video, whether it is a normal-speed video or a "
        "timelapse video. Here are some examples:"
    ),
}

SEED_EXEMPLARS = {
    "attribute": (
        "A chameleon's skin changes from brown to bright green.",
        "A leaf changing color from vibrant green to rich autumn red.",
        "A car transitioning from silver to matte black.",
    ),
    "object_relation": (
        "A man picking an apple from a tree and placing it in a basket.",
        "A bird picking up a twig and placing it in its nest.",
        "A child placing a toy car on a toy track.",
    ),
    "background": (
        "A cityscape transitioning from day to night.",
        "A forest changing from summer greenery to autumn foliage.",
        "A bench by a lake from foggy morning to sunny afternoon.",
    ),
}


@dataclass
class PromptDraft:
    """Unreviewed synthesized prompt; admitted to a corpus only after review."""

    id: str
    category: str
    text: str
    start_value: str
    end_value: str
    transition_object: str = ""
    distractors: tuple[str, ...] = ()
    reviewed: bool = False

    def to_record(self) -> dict:
        d = asdict(self)
        d["distractors"] = list(self.distractors)
        return d

    @classmethod
    def from_record(cls, rec: dict) -> "PromptDraft":
        return cls(
            id=str(rec["id"]),
            category=str(rec["category"]),
            text=str(rec["text"]),
            start_value=str(rec.get("start_value", "")),
            end_value=str(rec.get("end_value", "")),
            transition_object=str(rec.get("transition_object", "")),
            distractors=tuple(rec.get("distractors", ())),
            reviewed=bool(rec.get("reviewed", False)),
        )


_FROM_TO = re.compile(r"\bfrom\s+(.+?)\s+to\s+(.+?)(?:[.,;!?]|$)", re.IGNORECASE)
_TWO_GERUNDS = re.compile(r"\b(\w+ing)\b.+?\band\b.+?\b(\w+ing)\b", re.IGNORECASE)
_TRANSFER = re.compile(
    r"\b(pass|place|put|move|drop|pick|hand|throw|set|transfer|slide|pour|insert)"
    r"(?:s|ing|ed)?\b.*?\b(on|onto|in|into|to)\s+(.+?)(?:[.,;!?]|$)",
    re.IGNORECASE,
)
_HEAD_STOPWORDS = {
    "a", "an", "the", "by", "on", "in", "at", "of", "with", "and", "its",
    "his", "her", "their", "from", "to", "some", "is", "are",
}


def _head_object_mentions(text: str) -> list[str]:
    """Candidate object words in the clause before the transition phrase."""
    head = re.split(r"\bfrom\b", text, maxsplit=1, flags=re.IGNORECASE)[0]
    words = re.findall(r"[A-Za-z']+", head.lower())
    return [
        w for w in words
        if w not in _HEAD_STOPWORDS and not w.endswith("ing") and len(w) > 2
    ]


def lexical_transition_terms(text: str, category: str) -> tuple[str, str] | None:
    """Extract (start term, end term) if the draft names both states, else None."""
    m = _FROM_TO.search(text)
    if m:
        start, end = m.group(1).strip(), m.group(2).strip()
        if start and end and start.lower() != end.lower():
            if category == "background" and len(set(_head_object_mentions(text))) < 2:
                return None
            return start, end
        return None
    if category == "object_relation":
        m = _TWO_GERUNDS.search(text)
        if m and m.group(1).lower() != m.group(2).lower():
            return m.group(1), m.group(2)
        m = _TRANSFER.search(text)
        if m:
            return m.group(1), f"{m.group(2)} {m.group(3).strip()}"
    return None


def synthesize_prompts(
    category: str,
    llm,
    count: int,
    exemplars: Iterable[str] | None = None,
    max_rounds: int = 3,
) -> tuple[list[PromptDraft], list[tuple[str, str]]]:
    """Draft new prompts of one category with a text-generation client.

    Returns ``(drafts, rejected)`` where ``rejected`` pairs each dropped line
    with the reason.  Drafts are flagged unreviewed; nothing here enters a
    corpus until a human review pass accepts it.
    """
    if category not in CATEGORIES:
        raise CorpusError(f"unknown category {category!r}")
    exemplars = tuple(exemplars) if exemplars is not None else SEED_EXEMPLARS[category]
    if not exemplars:
        raise CorpusError("exemplars must be non-empty")
    if count == 0:
        return [], []

    instruction = INSTRUCTION_TEMPLATES[category]
    body = instruction + "\n\n" + "\n".join(exemplars)
    drafts: list[PromptDraft] = []
    rejected: list[tuple[str, str]] = []
    seen_text: set[str] = set()
    for _ in range(max_rounds):
        request = body + f"\n\nGenerate {count} new prompts, one per line."
        raw = llm.complete([{"role": "user", "content": request}])
        for line in raw.splitlines():
            text = re.sub(r"^\s*(?:[-*]|\d+[.)])\s*", "", line).strip()
            if not text or text in seen_text:
                continue
            seen_text.add(text)
            terms = lexical_transition_terms(text, category)
            if terms is None:
                rejected.append((text, "no start/end state terms found"))
                continue
            drafts.append(
                PromptDraft(
                    id=f"draft-{uuid.uuid4().hex[:10]}",
                    category=category,
                    text=text,
                    start_value=terms[0],
                    end_value=terms[1],
                )
            )
            if len(drafts) >= count:
                return drafts[:count], rejected
    return drafts, rejected


def save_drafts(drafts: Iterable[PromptDraft], path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for d in drafts:
            f.write(json.dumps(d.to_record(), sort_keys=True, ensure_ascii=False) + "\n")


def load_drafts(path: Path | str) -> list[PromptDraft]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(PromptDraft.from_record(json.loads(line)))
        except (json.JSONDecodeError, KeyError) as exc:
            raise CorpusParseError(f"bad draft record: {exc}", line=lineno)
    return out


def admit_reviewed_drafts(drafts: Iterable[PromptDraft]) -> list[TransitionPrompt]:
    """Turn reviewed drafts into validated prompts; unreviewed drafts are skipped."""
    admitted = []
    for d in drafts:
        if not d.reviewed:
            continue
        p = make_prompt(
            id=d.id,
            category=d.category,
            text=d.text,
            transition_object=d.transition_object,
            start_value=d.start_value,
            end_value=d.end_value,
            distractors=d.distractors,
        )
        validate_prompt(p)
        admitted.append(p)
    return admitted
