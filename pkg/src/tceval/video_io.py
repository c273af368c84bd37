"""Frame decoding, equal-gap resampling, index remapping, and composites.

Frames are row-major RGB uint8 arrays.  Frame indices are 1-based everywhere
a caller sees them; assertions are authored against a canonical 16-frame
index space and remapped to the actual frame count at verification time.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np
from PIL import Image

CANONICAL_FRAME_COUNT = 16
MAX_COMPOSITE_MEMBERS = 5


class VideoError(Exception):
    pass


class VideoDecodeError(VideoError):
    pass


@dataclass
class FrameSequence:
    """A decoded video: ordered RGB frames sharing one resolution."""

    frames: list[np.ndarray]
    fps: float
    source_id: str

    def __post_init__(self):
        if not self.frames:
            raise VideoError("frame sequence is empty")
        shape = self.frames[0].shape
        for i, f in enumerate(self.frames, start=1):
            if f.shape != shape:
                raise VideoError(f"frame {i} resolution {f.shape} differs from {shape}")

    def __len__(self) -> int:
        return len(self.frames)

    def frame(self, index: int) -> np.ndarray:
        """Frame by 1-based index."""
        if not 1 <= index <= len(self.frames):
            raise VideoError(f"frame index {index} out of range 1..{len(self.frames)}")
        return self.frames[index - 1]


@dataclass
class FrameComposite:
    image: np.ndarray
    member_indices: list[int]


def equal_gap_indices(k: int, n: int) -> list[int]:
    """1-based selection of n indices from 1..k at equal gaps.

    Uses idx_j = round(1 + (j-1)(k-1)/(n-1)); for n >= 2 the first and last
    frames are always included and the selection is strictly increasing.
    """
    if k < 1:
        raise VideoError(f"sequence length {k} must be >= 1")
    if not 1 <= n <= k:
        raise VideoError(f"target count {n} must be in 1..{k}")
    if n == 1:
        return [1]
    step = (k - 1) / (n - 1)
    return [round(1 + (j - 1) * step) for j in range(1, n + 1)]


def resample_equal_gaps(seq: FrameSequence, n: int) -> FrameSequence:
    """Equal-gap subsample to n frames; identity when the count already matches."""
    if n == len(seq):
        return seq
    idx = equal_gap_indices(len(seq), n)
    return FrameSequence(
        frames=[seq.frames[i - 1] for i in idx], fps=seq.fps, source_id=seq.source_id
    )


def remap_index(i: int, k: int, canonical: int = CANONICAL_FRAME_COUNT) -> int:
    """Map a canonical-space frame index onto a k-frame video.

    Linear remap keeps the start/middle/end semantics of assertions authored
    against the canonical index space.
    """
    if not 1 <= i <= canonical:
        raise VideoError(f"frame index {i} out of range 1..{canonical}")
    if k == canonical:
        return i
    return round(1 + (i - 1) * (k - 1) / (canonical - 1))


def decode_video(path: Path | str) -> tuple[list[np.ndarray], float]:
    """Decode all frames (RGB) plus the native fps via the configured decoder."""
    path = Path(path)
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise VideoDecodeError(f"cannot open video: {path}")
    native_fps = cap.get(cv2.CAP_PROP_FPS) or 0.0
    frames = []
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        frames.append(cv2.cvtColor(frame, cv2.COLOR_BGR2RGB))
    cap.release()
    if not frames:
        raise VideoDecodeError(f"no decodable frames in {path}")
    return frames, native_fps


def extract_frames(
    video: Path | str, fps: float = 8.0, count: int = CANONICAL_FRAME_COUNT
) -> FrameSequence:
    """Decode a video, sample at the target rate, and select `count` frames.

    A count of 1 returns the single middle frame; otherwise the decoded
    sequence is reduced with equal-gap selection, keeping first and last.
    """
    video = Path(video)
    frames, native_fps = decode_video(video)
    if fps and native_fps > 0 and abs(native_fps - fps) > 1e-6:
        duration = len(frames) / native_fps
        picked = []
        j = 0
        while j / fps < duration:
            idx = min(len(frames) - 1, round(j / fps * native_fps))
            if not picked or idx != picked[-1]:
                picked.append(idx)
            j += 1
        frames = [frames[i] for i in picked]
    if count == 1:
        frames = [frames[(len(frames) - 1) // 2]]
    else:
        if len(frames) < count:
            raise VideoDecodeError(
                f"{video.name}: {len(frames)} frames at {fps:g} fps, need {count}"
            )
        idx = equal_gap_indices(len(frames), count)
        frames = [frames[i - 1] for i in idx]
    return FrameSequence(frames=frames, fps=fps or native_fps, source_id=video.stem)


def compose_horizontal(seq: FrameSequence, indices: list[int]) -> FrameComposite:
    """Concatenate the selected frames left to right in ascending index order.

    Members are resized to the minimum member height (aspect preserved); no
    labels or overlays are drawn, the judge relies on left-to-right order.
    """
    if not 1 <= len(indices) <= MAX_COMPOSITE_MEMBERS:
        raise VideoError(
            f"composite takes 1..{MAX_COMPOSITE_MEMBERS} indices, got {len(indices)}"
        )
    k = len(seq)
    for i in indices:
        if not 1 <= i <= k:
            raise VideoError(f"frame index {i} out of range 1..{k}")
    ordered = sorted(set(indices))
    members = [seq.frames[i - 1] for i in ordered]
    target_h = min(m.shape[0] for m in members)
    resized = []
    for m in members:
        h, w = m.shape[:2]
        if h != target_h:
            new_w = max(1, round(w * target_h / h))
            img = Image.fromarray(m).resize((new_w, target_h), Image.BILINEAR)
            m = np.asarray(img)
        resized.append(m)
    return FrameComposite(image=np.concatenate(resized, axis=1), member_indices=ordered)


# ---------------------------------------------------------------------------
# On-disk frame cache: numbered PNGs under a content-hash directory.


def file_content_hash(path: Path | str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def frame_hash(frame: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(str(frame.shape).encode())
    h.update(np.ascontiguousarray(frame).tobytes())
    return h.hexdigest()


def encode_png(frame: np.ndarray) -> bytes:
    ok, buf = cv2.imencode(".png", cv2.cvtColor(frame, cv2.COLOR_RGB2BGR))
    if not ok:
        raise VideoError("PNG encoding failed")
    return buf.tobytes()


def decode_png(data: bytes) -> np.ndarray:
    arr = cv2.imdecode(np.frombuffer(data, np.uint8), cv2.IMREAD_COLOR)
    if arr is None:
        raise VideoError("PNG decoding failed")
    return cv2.cvtColor(arr, cv2.COLOR_BGR2RGB)


def write_frame_dir(seq: FrameSequence, root: Path | str, dirname: str) -> Path:
    """Persist a sequence as root/dirname/frame_0001.png... plus meta.json."""
    out = Path(root) / dirname
    out.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(seq.frames, start=1):
        (out / f"frame_{i:04d}.png").write_bytes(encode_png(frame))
    meta = {"video_id": seq.source_id, "fps": seq.fps, "frames": len(seq.frames)}
    (out / "meta.json").write_text(
        json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8"
    )
    return out


def read_frame_dir(directory: Path | str) -> FrameSequence:
    directory = Path(directory)
    meta_file = directory / "meta.json"
    if not meta_file.exists():
        raise VideoError(f"not a frame directory (no meta.json): {directory}")
    meta = json.loads(meta_file.read_text(encoding="utf-8"))
    files = sorted(directory.glob("frame_*.png"))
    if not files:
        raise VideoError(f"no frames in {directory}")
    frames = [decode_png(p.read_bytes()) for p in files]
    return FrameSequence(
        frames=frames, fps=float(meta.get("fps", 0.0)), source_id=str(meta.get("video_id", ""))
    )


def list_frame_dirs(root: Path | str) -> dict[str, Path]:
    """Map video_id -> frame directory for every cached sequence under root."""
    out: dict[str, Path] = {}
    for meta_file in sorted(Path(root).glob("*/meta.json")):
        meta = json.loads(meta_file.read_text(encoding="utf-8"))
        vid = str(meta.get("video_id", meta_file.parent.name))
        out[vid] = meta_file.parent
    return out
