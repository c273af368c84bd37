"""Annotation task service: serves assignments and collects Likert ratings.

Every video is assigned to a fixed number of distinct annotators (3 by
default) by deterministic round-robin at pool creation.  Ratings append to a
JSON-lines journal (atomic line writes, replayed on startup) and compact to
the analysis CSV schema on export.
"""

from __future__ import annotations

import io
import csv
import json
import threading
from dataclasses import dataclass, asdict
from pathlib import Path

from .analysis import HumanRating
from .cache import atomic_append_line

RATERS_PER_VIDEO = 3


class AnnotationError(Exception):
    pass


class UnknownAnnotatorError(AnnotationError):
    pass


class TaskStateError(AnnotationError):
    """Task not assigned to this annotator, already rated, or already skipped."""


@dataclass(frozen=True)
class AnnotationTask:
    task_id: str
    video_id: str
    prompt: str
    video_ref: str
    assigned_annotator: str


@dataclass(frozen=True)
class VideoItem:
    video_id: str
    prompt: str
    video_ref: str


class TaskPool:
    """Precomputed task assignments plus the mutable rating/skip state."""

    def __init__(self, tasks: list[AnnotationTask], annotators: list[str],
                 journal_path: Path | None = None):
        self._lock = threading.Lock()
        self.annotators = list(annotators)
        self.tasks = list(tasks)
        self._by_id = {t.task_id: t for t in tasks}
        self.ratings: dict[str, HumanRating] = {}  # task_id -> rating
        self.skipped: dict[str, str] = {}  # task_id -> reason
        self.journal_path = journal_path

    # -- construction -------------------------------------------------------

    @classmethod
    def create(
        cls,
        videos: list[VideoItem],
        annotators: list[str],
        per_video: int = RATERS_PER_VIDEO,
        journal_path: Path | None = None,
    ) -> "TaskPool":
        if len(set(annotators)) != len(annotators):
            raise AnnotationError("annotator ids must be unique")
        if len(annotators) < per_video:
            raise AnnotationError(
                f"need at least {per_video} annotators to give each video "
                f"{per_video} distinct raters, got {len(annotators)}"
            )
        ids = [v.video_id for v in videos]
        if len(set(ids)) != len(ids):
            raise AnnotationError("video ids must be unique")
        tasks = []
        for i, video in enumerate(videos):
            for j in range(per_video):
                annotator = annotators[(i + j) % len(annotators)]
                tasks.append(
                    AnnotationTask(
                        task_id=f"t{len(tasks) + 1:05d}",
                        video_id=video.video_id,
                        prompt=video.prompt,
                        video_ref=video.video_ref,
                        assigned_annotator=annotator,
                    )
                )
        return cls(tasks=tasks, annotators=annotators, journal_path=journal_path)

    @classmethod
    def from_pool_file(cls, path: Path | str, journal_path: Path | str | None = None) -> "TaskPool":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        videos = [
            VideoItem(
                video_id=str(v["video_id"]),
                prompt=str(v.get("prompt", "")),
                video_ref=str(v.get("video_ref", "")),
            )
            for v in data["videos"]
        ]
        pool = cls.create(
            videos=videos,
            annotators=[str(a) for a in data["annotators"]],
            per_video=int(data.get("per_video", RATERS_PER_VIDEO)),
            journal_path=Path(journal_path) if journal_path else None,
        )
        if pool.journal_path and pool.journal_path.exists():
            pool.replay_journal(pool.journal_path)
        return pool

    def replay_journal(self, path: Path | str) -> None:
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec["type"] == "rating":
                task = self._by_id[rec["task_id"]]
                self.ratings[task.task_id] = HumanRating(
                    video_id=task.video_id,
                    annotator_id=task.assigned_annotator,
                    q1=int(rec["q1"]),
                    q2=int(rec["q2"]),
                )
            elif rec["type"] == "skip":
                self.skipped[rec["task_id"]] = str(rec.get("reason", ""))

    # -- service operations --------------------------------------------------

    def _check_annotator(self, annotator_id: str) -> None:
        if annotator_id not in self.annotators:
            raise UnknownAnnotatorError(f"unknown annotator {annotator_id!r}")

    def next_task(self, annotator_id: str) -> AnnotationTask | None:
        """First open task assigned to this annotator; sticky until rated or skipped."""
        with self._lock:
            self._check_annotator(annotator_id)
            for task in self.tasks:
                if (
                    task.assigned_annotator == annotator_id
                    and task.task_id not in self.ratings
                    and task.task_id not in self.skipped
                ):
                    return task
            return None

    def submit_rating(self, annotator_id: str, task_id: str, q1: int, q2: int) -> HumanRating:
        with self._lock:
            self._check_annotator(annotator_id)
            task = self._by_id.get(task_id)
            if task is None or task.assigned_annotator != annotator_id:
                raise TaskStateError(f"task {task_id!r} is not assigned to {annotator_id!r}")
            if task_id in self.ratings:
                raise TaskStateError(f"task {task_id!r} is already rated")
            if task_id in self.skipped:
                raise TaskStateError(f"task {task_id!r} was skipped")
            rating = HumanRating(
                video_id=task.video_id, annotator_id=annotator_id, q1=q1, q2=q2
            )
            if self.journal_path is not None:
                atomic_append_line(
                    self.journal_path,
                    json.dumps(
                        {"type": "rating", "task_id": task_id, "q1": q1, "q2": q2},
                        sort_keys=True,
                    ),
                )
            self.ratings[task_id] = rating
            return rating

    def skip_task(self, annotator_id: str, task_id: str, reason: str = "") -> None:
        with self._lock:
            self._check_annotator(annotator_id)
            task = self._by_id.get(task_id)
            if task is None or task.assigned_annotator != annotator_id:
                raise TaskStateError(f"task {task_id!r} is not assigned to {annotator_id!r}")
            if task_id in self.ratings:
                raise TaskStateError(f"task {task_id!r} is already rated")
            if self.journal_path is not None:
                atomic_append_line(
                    self.journal_path,
                    json.dumps(
                        {"type": "skip", "task_id": task_id, "reason": reason}, sort_keys=True
                    ),
                )
            self.skipped[task_id] = reason

    def all_ratings(self) -> list[HumanRating]:
        return list(self.ratings.values())

    def export_csv(self) -> str:
        """Ratings in the analysis CSV schema, sorted by video then annotator."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["video_id", "annotator_id", "q1", "q2"])
        for r in sorted(self.all_ratings(), key=lambda r: (r.video_id, r.annotator_id)):
            writer.writerow([r.video_id, r.annotator_id, r.q1, r.q2])
        return buf.getvalue()

    def progress(self) -> dict:
        return {
            "tasks": len(self.tasks),
            "rated": len(self.ratings),
            "skipped": len(self.skipped),
            "annotators": len(self.annotators),
        }


def export_journal_csv(pool_file: Path | str, journal_file: Path | str) -> str:
    pool = TaskPool.from_pool_file(pool_file, journal_path=journal_file)
    return pool.export_csv()


# ---------------------------------------------------------------------------
# HTTP service


try:  # service dependencies are part of the base install but imported lazily
    from pydantic import BaseModel, Field

    class RatingBody(BaseModel):
        annotator_id: str
        task_id: str
        q1: int = Field(ge=1, le=5)
        q2: int = Field(ge=1, le=5)

    class SkipBody(BaseModel):
        annotator_id: str
        task_id: str
        reason: str = ""

except ImportError:  # pragma: no cover
    RatingBody = SkipBody = None  # type: ignore[assignment]


def build_app(pool: TaskPool, ui_dir: Path | None = None, video_dir: Path | None = None):
    from fastapi import FastAPI, HTTPException, Response

    app = FastAPI(title="transition rating service")

    @app.get("/api/health")
    def health():
        return {"status": "ok", **pool.progress()}

    @app.get("/api/annotator/{annotator_id}/next")
    def next_task(annotator_id: str):
        try:
            task = pool.next_task(annotator_id)
        except UnknownAnnotatorError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        if task is None:
            return Response(status_code=204)
        return asdict(task)

    @app.post("/api/ratings")
    def submit_rating(body: RatingBody):
        try:
            pool.submit_rating(body.annotator_id, body.task_id, body.q1, body.q2)
        except UnknownAnnotatorError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except TaskStateError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"status": "ok"}

    @app.post("/api/skip")
    def skip(body: SkipBody):
        try:
            pool.skip_task(body.annotator_id, body.task_id, body.reason)
        except UnknownAnnotatorError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except TaskStateError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"status": "ok"}

    @app.get("/api/export.csv")
    def export():
        return Response(content=pool.export_csv(), media_type="text/csv")

    if video_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/videos", StaticFiles(directory=str(video_dir)), name="videos")
    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app


def serve(pool: TaskPool, port: int = 8787, ui_dir: Path | None = None,
          video_dir: Path | None = None) -> None:
    import uvicorn

    app = build_app(pool, ui_dir=ui_dir, video_dir=video_dir)
    uvicorn.run(app, host="0.0.0.0", port=port, log_level="info")
