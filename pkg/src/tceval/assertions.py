"""Frame-indexed assertion generation and parsing.

Each benchmark prompt expands into yes/no assertion questions paired with the
1-based frame indices needed to check them.  Assertions cover three
dimensions: transition completion, transition-object consistency, and other
objects.  Generation is few-shot: a fixed instruction plus three worked
examples (one per transition category) keep the client's output in a stable,
parseable layout.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .cache import FileCache, content_key

COMPLETION = "completion"
CONSISTENCY = "consistency"
OTHER = "other"
DIMENSIONS = (COMPLETION, CONSISTENCY, OTHER)

CANONICAL_INDEX_SPACE = 16
MAX_INDICES = 5
TEMPLATE_VERSION = "v1"

SECTION_HEADERS = {
    COMPLETION: 'Transition Completion',
    CONSISTENCY: 'Transition object consistency',
    OTHER: 'Other objects',
}

SYSTEM_INSTRUCTION = (
    "Given a video description, generate assertion questions and paired frames "
    "to verify important components in the description. Each description "
    "describes a transformation/transition of an object's attribute, or an "
    "object's position or background. Identify the transition object, its "
    "start and end status/place, and other objects, and ask questions to "
    "verify them. Below are three examples showing three different types of "
    "transitions. Follow these examples and generate questions for the given "
    "descriptions."
)

EXEMPLAR_ATTRIBUTE = (
    "A chameleon changing from brown to bright green.",
    """Transition object: chameleon, start: brown, end: bright green
other objects: None
- Check "Transition Completion"
Input: Frame 1
Q: Is there a brown chameleon?
Input: Frame 16
Q: Is there a bright green chameleon?
Input: Frame 9
Q: Is there a chameleon with its color in between brown and bright green?
Input: Frame 1, 5, 9, 13, 16
Q: Has the chameleon changed color from brown to bright green?
- Check "Transition object consistency"
Input: Frame 1, 6
Q: Aside from color difference, do Frame 1 and Frame 6 show the same chameleon?
Input: Frame 1, 11
Q: Aside from color difference, do Frame 1 and Frame 11 show the same chameleon?
- Check "Other objects"
None""",
)

EXEMPLAR_RELATION = (
    "A man passing a ball from his left hand to his right hand.",
    """Transition object: ball, start: left hand, end: right hand
other objects: man
- Check "Transition Completion"
Input: Frame 1
Q: Is there a ball on the man's left hand?
Input: Frame 16
Q: Is there a ball on the man's right hand?
Input: Frame 9
Q: Is the ball between the man's left hand and right hand?
Input: Frame 1, 5, 9, 13, 16
Q: Has the ball been passed from left hand to right hand?
- Check "Transition object consistency"
Input: Frame 1, 6
Q: Aside from position difference, do Frame 1 and Frame 6 show the same ball?
Input: Frame 1, 11
Q: Aside from position difference, do Frame 1 and Frame 11 show the same ball?
- Check "Other objects"
Input: Frame 1
Q: Is there a man with a ball in his hand in the image?
Input: Frame 1, 6, 11
Q: Do all the frames show the same man?""",
)

EXEMPLAR_BACKGROUND = (
    "A bench by a lake from foggy morning to sunny afternoon.",
    """Transition object: background, start: foggy morning, end: sunny afternoon
Other objects: bench, lake
- Check "Transition Completion"
Input: Frame 1
Q: Is the image showing a foggy morning?
Input: Frame 16
Q: Is the image showing a sunny afternoon?
Input: Frame 9
Q: Is the image showing a mix of foggy morning and sunny afternoon?
Input: Frame 1, 5, 9, 13, 16
Q: Has the background changed from foggy morning to sunny afternoon?
- Check "Transition object consistency"
None: background is an abstract concept without a physical form
- Check "Other objects"
Input: Frame 1
Q: Is there a bench by a lake in the image?
Input: Frame 1, 6, 11
Q: Do all the frames show the same bench and a lake?""",
)

EXEMPLARS = (EXEMPLAR_ATTRIBUTE, EXEMPLAR_RELATION, EXEMPLAR_BACKGROUND)


class AssertionEngineError(Exception):
    """Base for assertion-engine failures."""


class AssertionParseError(AssertionEngineError):
    def __init__(self, message: str, line: int | None = None, raw_text: str = ""):
        self.line = line
        self.raw_text = raw_text
        super().__init__(f"line {line}: {message}" if line is not None else message)


class AssertionSetError(AssertionEngineError):
    pass


@dataclass(frozen=True)
class Assertion:
    id: str
    dimension: str
    frame_indices: tuple[int, ...]
    question: str


@dataclass
class AssertionSet:
    prompt_id: str
    assertions: list[Assertion]
    generator_fingerprint: str = ""

    def by_dimension(self, dimension: str) -> list[Assertion]:
        return [a for a in self.assertions if a.dimension == dimension]

    def in_scope(self) -> list[Assertion]:
        """Assertions counted by the all-or-nothing completion check."""
        return [a for a in self.assertions if a.dimension in (COMPLETION, CONSISTENCY)]


# ---------------------------------------------------------------------------
# Parsing and rendering of the exemplar layout.

_HEADER_RE = re.compile(r'^-\s*Check\s+"([^"]+)"\s*$')
_INPUT_RE = re.compile(r"^Input:\s*(.+)$", re.IGNORECASE)
_QUESTION_RE = re.compile(r"^Q:\s*(.+)$")
_NONE_RE = re.compile(r"^None\b")


def _dimension_for_header(text: str) -> str | None:
    lowered = text.lower()
    if "consistency" in lowered:
        return CONSISTENCY
    if "completion" in lowered:
        return COMPLETION
    if "other" in lowered:
        return OTHER
    return None


def _parse_indices(text: str, lineno: int, raw: str) -> tuple[int, ...]:
    body = re.sub(r"^\s*Frames?\s*", "", text, flags=re.IGNORECASE)
    tokens = [t for t in re.split(r"(?:[,\s]|\band\b)+", body) if t]
    indices = []
    for tok in tokens:
        if not tok.isdigit():
            raise AssertionParseError(
                f"unparsable frame index {tok!r} in {text!r}", line=lineno, raw_text=raw
            )
        indices.append(int(tok))
    if not indices:
        raise AssertionParseError(f"no frame indices in {text!r}", line=lineno, raw_text=raw)
    return tuple(sorted(set(indices)))


def parse_assertion_text(raw: str) -> AssertionSet:
    """Parse generated text in the exemplar layout into an unattributed set.

    Lines outside the recognized shapes (the preamble naming the transition
    object, blank lines) are ignored; a question without a preceding Input
    line or an Input line without frame indices is an error carrying the line
    number.
    """
    dimension: str | None = None
    pending: tuple[int, ...] | None = None
    pending_line = 0
    assertions: list[Assertion] = []
    saw_header = False

    for lineno, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        m = _HEADER_RE.match(stripped)
        if m:
            if pending is not None:
                raise AssertionParseError(
                    "Input line without a following question", line=pending_line, raw_text=raw
                )
            dim = _dimension_for_header(m.group(1))
            if dim is None:
                raise AssertionParseError(
                    f"unknown check header {m.group(1)!r}", line=lineno, raw_text=raw
                )
            dimension = dim
            saw_header = True
            continue
        m = _INPUT_RE.match(stripped)
        if m:
            if dimension is None:
                raise AssertionParseError(
                    "Input line before any check header", line=lineno, raw_text=raw
                )
            if pending is not None:
                raise AssertionParseError(
                    "Input line without a following question", line=pending_line, raw_text=raw
                )
            pending = _parse_indices(m.group(1), lineno, raw)
            pending_line = lineno
            continue
        m = _QUESTION_RE.match(stripped)
        if m:
            if pending is None:
                raise AssertionParseError(
                    "question without a preceding Input line", line=lineno, raw_text=raw
                )
            assertions.append(
                Assertion(
                    id=f"a{len(assertions) + 1:02d}",
                    dimension=dimension,  # type: ignore[arg-type]
                    frame_indices=pending,
                    question=m.group(1).strip(),
                )
            )
            pending = None
            continue
        if _NONE_RE.match(stripped):
            continue  # explicit empty section, optionally with an explanation
        # Preamble or free-form commentary: ignored.

    if pending is not None:
        raise AssertionParseError(
            "Input line without a following question", line=pending_line, raw_text=raw
        )
    if not saw_header:
        raise AssertionParseError("no check headers found", raw_text=raw)
    return AssertionSet(prompt_id="", assertions=assertions)


def render_assertion_text(aset: AssertionSet) -> str:
    """Emit the canonical layout; parse(render(s)) reproduces the assertions."""
    lines: list[str] = []
    for dim in DIMENSIONS:
        lines.append(f'- Check "{SECTION_HEADERS[dim]}"')
        members = aset.by_dimension(dim)
        if not members:
            lines.append("None")
            continue
        for a in members:
            lines.append("Input: Frame " + ", ".join(str(i) for i in a.frame_indices))
            lines.append(f"Q: {a.question}")
    return "\n".join(lines)


def validate_assertion_set(
    aset: AssertionSet, background: bool = False, canonical: int = CANONICAL_INDEX_SPACE
) -> None:
    errs: list[str] = []
    ids = [a.id for a in aset.assertions]
    if len(set(ids)) != len(ids):
        errs.append("duplicate assertion ids")
    for a in aset.assertions:
        if a.dimension not in DIMENSIONS:
            errs.append(f"{a.id}: unknown dimension {a.dimension!r}")
        if not a.question.strip() or not a.question.rstrip().endswith("?"):
            errs.append(f"{a.id}: question must be non-empty and end with '?'")
        if not 1 <= len(a.frame_indices) <= MAX_INDICES:
            errs.append(f"{a.id}: needs 1..{MAX_INDICES} frame indices")
        if list(a.frame_indices) != sorted(set(a.frame_indices)):
            errs.append(f"{a.id}: indices must be ascending and unique")
        if a.frame_indices and not (
            1 <= a.frame_indices[0] and a.frame_indices[-1] <= canonical
        ):
            errs.append(f"{a.id}: indices outside 1..{canonical}")
        if a.dimension == CONSISTENCY and len(a.frame_indices) != 2:
            errs.append(f"{a.id}: consistency checks reference exactly 2 indices")
    completion = aset.by_dimension(COMPLETION)
    if not completion:
        errs.append("no completion assertions")
    else:
        singles = {a.frame_indices for a in completion if len(a.frame_indices) == 1}
        if (1,) not in singles:
            errs.append("completion lacks a single-frame check at index 1")
        if (canonical,) not in singles:
            errs.append(f"completion lacks a single-frame check at index {canonical}")
    if not aset.by_dimension(CONSISTENCY) and not background:
        errs.append("consistency section empty for a non-background prompt")
    if errs:
        raise AssertionSetError("; ".join(errs))


# ---------------------------------------------------------------------------
# Generation


def build_generation_messages(prompt_text: str) -> list[dict]:
    messages = [{"role": "system", "content": SYSTEM_INSTRUCTION}]
    for exemplar_prompt, exemplar_body in EXEMPLARS:
        messages.append({"role": "user", "content": exemplar_prompt})
        messages.append({"role": "assistant", "content": exemplar_body})
    messages.append({"role": "user", "content": prompt_text})
    return messages


def generation_cache_key(prompt_text: str, model_name: str) -> str:
    return content_key("assertion-gen", prompt_text, TEMPLATE_VERSION, model_name)


def generate_assertions(
    prompt,
    llm,
    model_name: str = "",
    cache: FileCache | None = None,
) -> tuple[AssertionSet, str]:
    """Generate, parse, and validate assertions for one transition prompt.

    Returns ``(assertion_set, raw_text)``.  Results are cached by
    (prompt text, template version, model name); a cache hit returns the
    stored record without touching the client.
    """
    fingerprint = f"{model_name}/{TEMPLATE_VERSION}"
    key = generation_cache_key(prompt.text, model_name)
    if cache is not None:
        hit = cache.get_json(key)
        if hit is not None:
            return record_to_set(hit["record"]), hit["raw"]

    raw = llm.complete(build_generation_messages(prompt.text), temperature=0.0)
    parsed = parse_assertion_text(raw)
    aset = AssertionSet(
        prompt_id=prompt.id,
        assertions=[
            Assertion(
                id=f"{prompt.id}#a{i:02d}",
                dimension=a.dimension,
                frame_indices=a.frame_indices,
                question=a.question,
            )
            for i, a in enumerate(parsed.assertions, start=1)
        ],
        generator_fingerprint=fingerprint,
    )
    validate_assertion_set(aset, background=(prompt.category == "background"))
    if cache is not None:
        cache.put_json(key, {"record": set_to_record(aset), "raw": raw})
    return aset, raw


# ---------------------------------------------------------------------------
# JSON-lines persistence (one AssertionSet per line; raw text archived along).


def set_to_record(aset: AssertionSet, category: str | None = None, raw: str | None = None) -> dict:
    rec = {
        "prompt_id": aset.prompt_id,
        "generator_fingerprint": aset.generator_fingerprint,
        "assertions": [
            {
                "id": a.id,
                "dimension": a.dimension,
                "frame_indices": list(a.frame_indices),
                "question": a.question,
            }
            for a in aset.assertions
        ],
    }
    if category is not None:
        rec["category"] = category
    if raw is not None:
        rec["raw"] = raw
    return rec


def record_to_set(rec: dict) -> AssertionSet:
    return AssertionSet(
        prompt_id=str(rec["prompt_id"]),
        generator_fingerprint=str(rec.get("generator_fingerprint", "")),
        assertions=[
            Assertion(
                id=str(a["id"]),
                dimension=str(a["dimension"]),
                frame_indices=tuple(int(i) for i in a["frame_indices"]),
                question=str(a["question"]),
            )
            for a in rec["assertions"]
        ],
    )


def save_assertion_records(records: list[dict], path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")


def load_assertion_records(path: Path | str) -> list[dict]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise AssertionParseError(f"bad assertion record: {exc.msg}", line=lineno)
    return out
