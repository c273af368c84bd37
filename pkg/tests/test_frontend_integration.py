"""Frontend-facing contract tests: the real HTTP service driven with exactly
the request sequence the browser UI performs, with the export consumed by the
correlate stage unmodified."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from tceval import cli
from tceval.annotation import TaskPool, VideoItem, build_app

FRONTEND_DIST = Path(__file__).resolve().parent.parent / "frontend" / "dist"

ANNOTATORS = ["ann-1", "ann-2", "ann-3"]
VIDEOS = ["chameleon-01__r1", "ball-01__r1", "bench-01__r1"]


@pytest.fixture
def client(tmp_path):
    pool = TaskPool.create(
        [VideoItem(v, f"prompt for {v}", f"/videos/{v}.mp4") for v in VIDEOS],
        ANNOTATORS,
        journal_path=tmp_path / "journal.jsonl",
    )
    ui = FRONTEND_DIST if (FRONTEND_DIST / "index.html").exists() else None
    return TestClient(build_app(pool, ui_dir=ui))


def drive_session(client: TestClient, annotator: str, score_for: dict[str, int]) -> list[str]:
    """Replay the UI loop: fetch next, submit both scores, until 204."""
    rated = []
    while True:
        resp = client.get(f"/api/annotator/{annotator}/next")
        if resp.status_code == 204:
            return rated
        task = resp.json()
        q1 = score_for[task["video_id"]]
        ok = client.post(
            "/api/ratings",
            json={
                "annotator_id": annotator,
                "task_id": task["task_id"],
                "q1": q1,
                "q2": min(5, q1 + 1),
            },
        )
        assert ok.status_code == 200
        rated.append(task["task_id"])


class TestScriptedSessionsAgainstRealService:
    def test_two_annotators_get_disjoint_tasks(self, client):
        scores = {v: 4 for v in VIDEOS}
        first = drive_session(client, "ann-1", scores)
        second = drive_session(client, "ann-2", scores)
        assert len(first) == len(VIDEOS)
        assert len(second) == len(VIDEOS)
        assert set(first).isdisjoint(second)

    def test_export_feeds_correlate_without_modification(self, client, tmp_path):
        scores = {"chameleon-01__r1": 5, "ball-01__r1": 4, "bench-01__r1": 2}
        for ann in ANNOTATORS:
            drive_session(client, ann, scores)
        ratings_csv = tmp_path / "ratings.csv"
        ratings_csv.write_text(client.get("/api/export.csv").text, encoding="utf-8")

        report = {
            "model": "toy",
            "videos": [
                {"video_id": "chameleon-01__r1", "prompt_id": "chameleon-01",
                 "tc": 1, "tc_score": 1.0},
                {"video_id": "ball-01__r1", "prompt_id": "ball-01",
                 "tc": 0, "tc_score": 0.875},
                {"video_id": "bench-01__r1", "prompt_id": "bench-01",
                 "tc": 1, "tc_score": 5 / 6},
            ],
        }
        report_path = tmp_path / "report.json"
        report_path.write_text(json.dumps(report), encoding="utf-8")

        out = tmp_path / "correlations.json"
        code = cli.main([
            "analyze", "correlate",
            "--metrics", str(report_path),
            "--ratings", str(ratings_csv),
            "--out", str(out),
        ])
        assert code == 0
        grid = json.loads(out.read_text())
        assert grid["correlations"]["n"] == 3
        assert grid["correlations"]["q1"]["spearman_rho"] == pytest.approx(1.0)


@pytest.mark.skipif(
    not (FRONTEND_DIST / "index.html").exists(),
    reason="frontend bundle not built (run `npm run build` in frontend/)",
)
class TestStaticBundleServing:
    def test_index_served_at_root(self, client):
        resp = client.get("/")
        assert resp.status_code == 200
        assert "Video transition rating" in resp.text
        assert 'src="./app.js"' in resp.text

    def test_compiled_module_served(self, client):
        resp = client.get("/app.js")
        assert resp.status_code == 200
        assert "import" in resp.text

    def test_instruction_slots_served(self, client):
        resp = client.get("/instructions.json")
        assert resp.status_code == 200
        assert "guidelines" in resp.json()
