"""Frame-consistency measurements for generative frame interpolation.

Covers embedding-based similarity (consecutive-frame and against ground
truth), the clamped linear map from raw cosine similarity onto [0, 1], the
weighted completion+consistency score for image-conditioned models, and the
flow/trajectory error metrics computed over files produced by external
estimators.
"""

from __future__ import annotations

import io
import json
import re
import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .cache import atomic_write_bytes
from .video_io import FrameSequence, encode_png, frame_hash

SIM_RANGE_LOW = 0.90
SIM_RANGE_HIGH = 0.98

# Consistency is one of three evaluation dimensions, hence the 2:1 split
# between assertion pass rate and mapped frame consistency.
WEIGHT_PASS_RATE = 2.0 / 3.0
WEIGHT_CONSISTENCY = 1.0 / 3.0

TRACKED_POINTS_DEFAULT = 1024


class ConsistencyError(Exception):
    pass


@dataclass
class EmbeddingVector:
    """Unit-norm feature vector tagged with the encoder that produced it."""

    values: np.ndarray
    model_fingerprint: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        norm = float(np.linalg.norm(self.values))
        if norm == 0.0:
            raise ConsistencyError("zero embedding vector cannot be normalized")
        self.values = self.values / norm


@dataclass
class FlowField:
    """Per-pixel displacement (u, v) in pixels for one frame pair."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        if self.u.shape != self.v.shape or self.u.ndim != 2:
            raise ConsistencyError(f"u/v planes must be equal 2-D shapes, got {self.u.shape} vs {self.v.shape}")

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def width(self) -> int:
        return self.u.shape[1]


@dataclass
class Trajectory:
    """Tracked point positions, shape (points, frames, 2); every point spans all frames."""

    positions: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        if self.positions.ndim != 3 or self.positions.shape[2] != 2:
            raise ConsistencyError(f"trajectory must have shape (P, K, 2), got {self.positions.shape}")
        if np.isnan(self.positions).any():
            raise ConsistencyError("trajectory contains untracked (NaN) positions")


@dataclass
class ConsistencyScore:
    raw_similarities: list[float]
    mapped: list[float]
    mean_mapped: float


def map_similarity(s: float, low: float = SIM_RANGE_LOW, high: float = SIM_RANGE_HIGH) -> float:
    """Clamped linear map of a raw similarity onto [0, 1].

    Values at or below ``low`` give 0, at or above ``high`` give 1.  The
    interior is computed with decimal-faithful rational arithmetic so that
    decimal-specified endpoints hit exact values (0.94 -> 0.5 for the default
    range), which plain binary float subtraction narrowly misses.
    """
    s = float(s)
    if s <= low:
        return 0.0
    if s >= high:
        return 1.0
    frac = (Fraction(str(s)) - Fraction(str(low))) / (Fraction(str(high)) - Fraction(str(low)))
    return float(frac)


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    if a.model_fingerprint != b.model_fingerprint:
        raise ConsistencyError(
            f"embedding fingerprints differ: {a.model_fingerprint!r} vs {b.model_fingerprint!r}"
        )
    if a.values.shape != b.values.shape:
        raise ConsistencyError("embedding lengths differ")
    return float(np.dot(a.values, b.values))


def _score_from_raw(raws: list[float], low: float, high: float) -> ConsistencyScore:
    mapped = [map_similarity(r, low, high) for r in raws]
    return ConsistencyScore(
        raw_similarities=raws, mapped=mapped, mean_mapped=sum(mapped) / len(mapped)
    )


def consecutive_consistency(
    embeds: list[EmbeddingVector], low: float = SIM_RANGE_LOW, high: float = SIM_RANGE_HIGH
) -> ConsistencyScore:
    """Mapped cosine similarity between each consecutive frame pair."""
    if len(embeds) < 2:
        raise ConsistencyError("need at least 2 frames for consecutive consistency")
    raws = [cosine_similarity(embeds[k], embeds[k + 1]) for k in range(len(embeds) - 1)]
    return _score_from_raw(raws, low, high)


def framewise_consistency(
    embeds: list[EmbeddingVector],
    ref_embeds: list[EmbeddingVector],
    low: float = SIM_RANGE_LOW,
    high: float = SIM_RANGE_HIGH,
) -> ConsistencyScore:
    """Mapped similarity between each frame and its ground-truth counterpart."""
    if len(embeds) != len(ref_embeds):
        raise ConsistencyError(
            f"frame counts differ: {len(embeds)} generated vs {len(ref_embeds)} reference"
        )
    raws = [cosine_similarity(a, b) for a, b in zip(embeds, ref_embeds)]
    return _score_from_raw(raws, low, high)


def tc_score_i2v(
    pass_rate: float,
    consistency: ConsistencyScore,
    w1: float = WEIGHT_PASS_RATE,
    w2: float = WEIGHT_CONSISTENCY,
) -> float:
    """Weighted sum of assertion pass rate and mean mapped frame consistency."""
    if w1 < 0 or w2 < 0 or abs((w1 + w2) - 1.0) > 1e-9:
        raise ConsistencyError(f"weights must be non-negative and sum to 1, got {w1}, {w2}")
    return w1 * pass_rate + w2 * consistency.mean_mapped


# ---------------------------------------------------------------------------
# Flow and trajectory error metrics.


def epe(flows: list[FlowField], ref_flows: list[FlowField]) -> float:
    """Mean Euclidean endpoint distance between two flow sets, over pixels and frames."""
    if len(flows) != len(ref_flows):
        raise ConsistencyError(f"flow counts differ: {len(flows)} vs {len(ref_flows)}")
    if not flows:
        raise ConsistencyError("empty flow list")
    shape = flows[0].u.shape
    for k, (f, r) in enumerate(zip(flows, ref_flows)):
        if f.u.shape != shape or r.u.shape != shape:
            raise ConsistencyError(
                f"flow pair {k}: shapes {f.u.shape} / {r.u.shape} differ from {shape}"
            )
    du = np.stack([f.u - r.u for f, r in zip(flows, ref_flows)])
    dv = np.stack([f.v - r.v for f, r in zip(flows, ref_flows)])
    return float(np.sqrt(du * du + dv * dv).mean())


def ate(traj: Trajectory, ref_traj: Trajectory) -> float:
    """Mean positional distance between matched tracked points, over points and frames."""
    if traj.positions.shape != ref_traj.positions.shape:
        raise ConsistencyError(
            f"trajectory shapes differ: {traj.positions.shape} vs {ref_traj.positions.shape}"
        )
    diff = traj.positions - ref_traj.positions
    return float(np.sqrt((diff * diff).sum(axis=2)).mean())


def resize_flow(flow: FlowField, width: int, height: int) -> FlowField:
    """Bilinear-resize a flow field, scaling vectors with the resolution change."""
    import cv2

    if flow.width == width and flow.height == height:
        return flow
    sx = width / flow.width
    sy = height / flow.height
    u = cv2.resize(flow.u.astype(np.float32), (width, height), interpolation=cv2.INTER_LINEAR)
    v = cv2.resize(flow.v.astype(np.float32), (width, height), interpolation=cv2.INTER_LINEAR)
    return FlowField(u=u * sx, v=v * sy)


# ---------------------------------------------------------------------------
# File formats: binary planar flow, trajectory CSV, embedding caches.

_FLOW_HEADER = struct.Struct("<II")


def write_flow_file(flow: FlowField, path: Path | str) -> None:
    """Planar float32 file: 8-byte little-endian (width, height) header, u-plane, v-plane."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(_FLOW_HEADER.pack(flow.width, flow.height))
        f.write(flow.u.astype("<f4").tobytes())
        f.write(flow.v.astype("<f4").tobytes())


def read_flow_file(path: Path | str) -> FlowField:
    data = Path(path).read_bytes()
    if len(data) < _FLOW_HEADER.size:
        raise ConsistencyError(f"flow file too short: {path}")
    width, height = _FLOW_HEADER.unpack_from(data)
    expected = _FLOW_HEADER.size + 2 * 4 * width * height
    if len(data) != expected:
        raise ConsistencyError(
            f"flow file {path}: expected {expected} bytes for {width}x{height}, got {len(data)}"
        )
    plane = width * height
    floats = np.frombuffer(data, dtype="<f4", offset=_FLOW_HEADER.size)
    u = floats[:plane].reshape(height, width)
    v = floats[plane:].reshape(height, width)
    return FlowField(u=u, v=v)


def read_flow_dir(directory: Path | str) -> list[FlowField]:
    files = sorted(Path(directory).glob("*.flow"))
    if not files:
        raise ConsistencyError(f"no .flow files in {directory}")
    return [read_flow_file(p) for p in files]


def write_trajectory_csv(traj: Trajectory, path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["point_id,frame,x,y"]
    n_points, n_frames, _ = traj.positions.shape
    for p in range(n_points):
        for k in range(n_frames):
            x, y = traj.positions[p, k]
            lines.append(f"{p},{k + 1},{float(x)!r},{float(y)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trajectory_csv(path: Path | str) -> Trajectory:
    import csv

    rows: dict[tuple[int, int], tuple[float, float]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        required = {"point_id", "frame", "x", "y"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ConsistencyError(f"trajectory CSV needs columns {sorted(required)}")
        for row in reader:
            rows[(int(row["point_id"]), int(row["frame"]))] = (
                float(row["x"]),
                float(row["y"]),
            )
    if not rows:
        raise ConsistencyError(f"empty trajectory CSV: {path}")
    points = sorted({p for p, _ in rows})
    frames = sorted({k for _, k in rows})
    positions = np.full((len(points), len(frames), 2), np.nan)
    for (p, k), (x, y) in rows.items():
        positions[points.index(p), frames.index(k)] = (x, y)
    return Trajectory(positions=positions)


# ---------------------------------------------------------------------------
# Embedding extraction with a per-frame disk cache.


def _safe_name(fingerprint: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", fingerprint) or "default"


def embed_frames(
    seq: FrameSequence, provider, cache_dir: Path | str | None = None
) -> list[EmbeddingVector]:
    """One unit-normalized vector per frame, cached by (frame hash, fingerprint)."""
    hashes = [frame_hash(f) for f in seq.frames]
    vectors: list[np.ndarray | None] = [None] * len(seq.frames)
    cache_root = None
    if cache_dir is not None:
        cache_root = Path(cache_dir) / _safe_name(provider.fingerprint)
        for i, h in enumerate(hashes):
            p = cache_root / f"{h}.npy"
            if p.exists():
                vectors[i] = np.load(p)

    missing = [i for i, v in enumerate(vectors) if v is None]
    if missing:
        images = [encode_png(seq.frames[i]) for i in missing]
        fresh = provider.embed_images(images)
        fresh = np.asarray(fresh, dtype=np.float64)
        if fresh.shape[0] != len(missing):
            raise ConsistencyError(
                f"provider returned {fresh.shape[0]} vectors for {len(missing)} frames"
            )
        for j, i in enumerate(missing):
            vectors[i] = fresh[j]
            if cache_root is not None:
                buf = io.BytesIO()
                np.save(buf, fresh[j].astype(np.float32))
                atomic_write_bytes(cache_root / f"{hashes[i]}.npy", buf.getvalue())

    embeds = [EmbeddingVector(values=v, model_fingerprint=provider.fingerprint) for v in vectors]
    dim = embeds[0].values.shape[0]
    for i, e in enumerate(embeds):
        if e.values.shape[0] != dim:
            raise ConsistencyError(
                f"frame {i + 1}: embedding length {e.values.shape[0]} != {dim} "
                f"for fingerprint {provider.fingerprint!r}"
            )
    return embeds


def save_video_embeddings(
    directory: Path | str, video_id: str, embeds: list[EmbeddingVector]
) -> None:
    """Store one (K, D) float32 matrix per video plus a fingerprint sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    matrix = np.stack([e.values for e in embeds]).astype(np.float32)
    buf = io.BytesIO()
    np.save(buf, matrix)
    atomic_write_bytes(directory / f"{video_id}.npy", buf.getvalue())
    meta_path = directory / "embeddings.json"
    meta = {"fingerprint": embeds[0].model_fingerprint, "dim": int(matrix.shape[1])}
    if meta_path.exists():
        existing = json.loads(meta_path.read_text(encoding="utf-8"))
        if existing != meta:
            raise ConsistencyError(
                f"embedding directory {directory} already holds fingerprint "
                f"{existing.get('fingerprint')!r}, refusing to mix with {meta['fingerprint']!r}"
            )
    else:
        meta_path.write_text(json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8")


def load_video_embeddings(directory: Path | str, video_id: str) -> list[EmbeddingVector]:
    directory = Path(directory)
    meta_path = directory / "embeddings.json"
    if not meta_path.exists():
        raise ConsistencyError(f"no embeddings.json in {directory}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    matrix_path = directory / f"{video_id}.npy"
    if not matrix_path.exists():
        raise ConsistencyError(f"no embeddings for video {video_id!r} in {directory}")
    matrix = np.load(matrix_path)
    if matrix.ndim != 2 or matrix.shape[1] != meta["dim"]:
        raise ConsistencyError(
            f"embedding matrix for {video_id!r} has shape {matrix.shape}, expected (*, {meta['dim']})"
        )
    return [
        EmbeddingVector(values=row, model_fingerprint=str(meta["fingerprint"]))
        for row in matrix
    ]


def list_video_embeddings(directory: Path | str) -> list[str]:
    return sorted(p.stem for p in Path(directory).glob("*.npy"))
