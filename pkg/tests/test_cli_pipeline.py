from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from tceval import cli
from tceval.assertions import EXEMPLARS
from tceval.corpus import CorpusManifest, make_prompt, save_corpus

PROMPTS = [
    dict(
        id="chameleon-01",
        category="attribute",
        text="A chameleon changing from brown to bright green.",
        transition_object="chameleon",
        start_value="brown",
        end_value="bright green",
    ),
    dict(
        id="ball-01",
        category="object_relation",
        text="A man passing a ball from his left hand to his right hand.",
        transition_object="ball",
        start_value="left hand",
        end_value="right hand",
    ),
    dict(
        id="bench-01",
        category="background",
        text="A bench by a lake from foggy morning to sunny afternoon.",
        transition_object="background",
        start_value="foggy morning",
        end_value="sunny afternoon",
        distractors=("bench", "lake"),
    ),
]

# Scripted judge: one completion failure for the ball video, one other-objects
# failure for the bench video, Yes everywhere else.
NO_QUESTIONS = [
    "Is there a ball on the man's right hand?",
    "Is there a bench by a lake in the image?",
]

EXPECTED_TCR = 100.0 * 2 / 3
EXPECTED_SCORES = {"chameleon-01": 1.0, "ball-01": 7 / 8, "bench-01": 5 / 6}


def write_video(path: Path, seed: int) -> None:
    import cv2

    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"mp4v"), 8, (64, 48))
    assert writer.isOpened()
    for i in range(16):
        shade = (seed * 37 + i * 13) % 250
        writer.write(np.full((48, 64, 3), shade, np.uint8))
    writer.release()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipeline")
    manifest = CorpusManifest(name="T2V", prompts=[make_prompt(**p) for p in PROMPTS])
    save_corpus(manifest, root / "corpus.jsonl")

    videos = root / "videos"
    videos.mkdir()
    for seed, p in enumerate(PROMPTS, start=1):
        write_video(videos / f"{p['id']}.mp4", seed)

    llm_script = {
        "responses": [
            {"match": prompt_text, "response": body} for prompt_text, body in EXEMPLARS
        ]
    }
    (root / "llm_script.json").write_text(json.dumps(llm_script))
    vlm_script = {
        "responses": [{"match": q, "response": "No"} for q in NO_QUESTIONS],
        "default": "Yes",
    }
    (root / "vlm_script.json").write_text(json.dumps(vlm_script))

    (root / "config.toml").write_text(
        f"""
[providers.llm]
kind = "scripted"
script = "{root / 'llm_script.json'}"

[providers.vlm]
kind = "scripted"
script = "{root / 'vlm_script.json'}"

[providers.embedding]
kind = "mock"
dim = 32
"""
    )
    return root


def run_pipeline(root: Path, run_dir: Path) -> Path:
    run_dir.mkdir(parents=True, exist_ok=True)
    cfg = ["--config", str(root / "config.toml"), "--set", f"cache_dir={run_dir / 'cache'}"]
    assert cli.main([
        "extract", "--videos", str(root / "videos"), "--fps", "8", "--frames", "16",
        "--out", str(run_dir / "frames"), *cfg,
    ]) == 0
    assert cli.main([
        "assert", "--corpus", str(root / "corpus.jsonl"),
        "--out", str(run_dir / "assertions.jsonl"), *cfg,
    ]) == 0
    assert cli.main([
        "verify", "--assertions", str(run_dir / "assertions.jsonl"),
        "--frames", str(run_dir / "frames"),
        "--out", str(run_dir / "verdicts.jsonl"), *cfg,
    ]) == 0
    assert cli.main([
        "score", "--verdicts", str(run_dir / "verdicts.jsonl"), "--mode", "t2v",
        "--model", "toy", "--out", str(run_dir / "report.json"), *cfg,
    ]) == 0
    return run_dir / "report.json"


class TestGoldenPipeline:
    def test_two_runs_are_byte_identical(self, workspace):
        report1 = run_pipeline(workspace, workspace / "run1")
        report2 = run_pipeline(workspace, workspace / "run2")
        assert report1.read_bytes() == report2.read_bytes()

    def test_report_matches_hand_computed_values(self, workspace):
        report_path = workspace / "run1" / "report.json"
        if not report_path.exists():
            run_pipeline(workspace, workspace / "run1")
        report = json.loads(report_path.read_text())
        assert report["overall"]["tcr"] == pytest.approx(EXPECTED_TCR, abs=1e-9)
        assert report["overall"]["videos"] == 3
        per_video = {v["video_id"]: v for v in report["videos"]}
        for vid, expected in EXPECTED_SCORES.items():
            assert per_video[vid]["tc_score"] == pytest.approx(expected, abs=1e-12)
        assert per_video["ball-01"]["tc"] == 0
        assert per_video["chameleon-01"]["tc"] == 1
        expected_mean = sum(EXPECTED_SCORES.values()) / 3
        assert report["overall"]["mean_tc_score"] == pytest.approx(expected_mean, abs=1e-12)
        assert report["per_category"]["attribute"]["tcr"] == 100.0
        assert report["per_category"]["object_relation"]["tcr"] == 0.0
        assert report["degraded_fraction"] == 0.0

    def test_rerun_in_same_directory_is_idempotent(self, workspace):
        report_path = workspace / "run1" / "report.json"
        before = report_path.read_bytes()
        run_pipeline(workspace, workspace / "run1")
        assert report_path.read_bytes() == before

    def test_csv_table_written_alongside(self, workspace):
        csv_path = workspace / "run1" / "report.csv"
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "model,category,videos,tcr,mean_tc_score"
        assert any(line.startswith("toy,overall,3,66.6667") for line in lines)


class TestI2vRoute:
    def test_consistency_then_i2v_score(self, workspace):
        run = workspace / "run1"
        if not (run / "verdicts.jsonl").exists():
            run_pipeline(workspace, run)
        cfg = ["--config", str(workspace / "config.toml"),
               "--set", f"cache_dir={run / 'cache'}"]
        assert cli.main([
            "consistency", "--frames", str(run / "frames"), "--metric", "consecutive",
            "--embeddings-out", str(run / "embeddings"),
            "--out", str(run / "consistency.jsonl"), *cfg,
        ]) == 0
        records = [
            json.loads(line)
            for line in (run / "consistency.jsonl").read_text().splitlines()
        ]
        assert len(records) == 3
        assert all(len(r["raw_similarities"]) == 15 for r in records)

        assert cli.main([
            "score", "--verdicts", str(run / "verdicts.jsonl"), "--mode", "i2v",
            "--embeddings", str(run / "embeddings"), "--model", "toy",
            "--out", str(run / "report_i2v.json"), *cfg,
        ]) == 0
        report = json.loads((run / "report_i2v.json").read_text())
        mapped_by_vid = {r["video_id"]: r["mean_mapped"] for r in records}
        for v in report["videos"]:
            pass_rate = EXPECTED_SCORES[v["prompt_id"]]
            expected = (2 / 3) * pass_rate + (1 / 3) * mapped_by_vid[v["video_id"]]
            assert v["tc_score"] == pytest.approx(expected, abs=1e-9)

    def test_i2v_without_embeddings_is_actionable_validation_error(self, workspace, capsys):
        run = workspace / "run1"
        code = cli.main([
            "score", "--verdicts", str(run / "verdicts.jsonl"), "--mode", "i2v",
            "--out", str(run / "nope.json"),
        ])
        assert code == cli.EXIT_VALIDATION
        assert "tceval consistency" in capsys.readouterr().err


class TestPerPromptBest:
    def test_best_replicate_aggregation(self, tmp_path):
        records = []
        for vid, answer in (("p1__r1", "No"), ("p1__r2", "Yes")):
            for i in range(2):
                records.append({
                    "prompt_id": "p1", "category": "attribute", "video_id": vid,
                    "assertion_id": f"p1#a{i:02d}", "dimension": "completion",
                    "answer": answer if i == 0 else "Yes",
                    "degraded": False, "raw_response": answer,
                })
        verdicts = tmp_path / "verdicts.jsonl"
        verdicts.write_text("\n".join(json.dumps(r) for r in records) + "\n")

        flat = tmp_path / "flat.json"
        assert cli.main(["score", "--verdicts", str(verdicts), "--mode", "t2v",
                         "--out", str(flat)]) == 0
        assert json.loads(flat.read_text())["overall"]["tcr"] == 50.0

        best = tmp_path / "best.json"
        assert cli.main(["score", "--verdicts", str(verdicts), "--mode", "t2v",
                         "--per-prompt-best", "--out", str(best)]) == 0
        report = json.loads(best.read_text())
        assert report["overall"]["tcr"] == 100.0
        assert report["overall"]["videos"] == 1
        assert report["videos"][0]["video_id"] == "p1__r2"


class TestDegradedRun:
    def test_unparsable_judge_degrades_and_exits_partial(self, workspace, tmp_path):
        bad_script = tmp_path / "vlm_bad.json"
        bad_script.write_text(json.dumps({"responses": [], "default": "cannot say"}))
        config = tmp_path / "config.toml"
        config.write_text(
            f"""
[providers.llm]
kind = "scripted"
script = "{workspace / 'llm_script.json'}"

[providers.vlm]
kind = "scripted"
script = "{bad_script}"
"""
        )
        run = workspace / "run1"
        out = tmp_path / "verdicts_degraded.jsonl"
        code = cli.main([
            "verify", "--assertions", str(run / "assertions.jsonl"),
            "--frames", str(run / "frames"), "--out", str(out),
            "--config", str(config), "--set", f"cache_dir={tmp_path / 'cache'}",
        ])
        assert code == cli.EXIT_PARTIAL
        records = [json.loads(l) for l in out.read_text().splitlines()]
        assert all(r["degraded"] and r["answer"] == "No" for r in records)

        report_out = tmp_path / "report.json"
        code = cli.main([
            "score", "--verdicts", str(out), "--mode", "t2v", "--out", str(report_out),
        ])
        assert code == cli.EXIT_PARTIAL
        report = json.loads(report_out.read_text())
        assert report["overall"]["tcr"] == 0.0
        assert report["degraded_fraction"] == 1.0


class TestAnalyzeCommands:
    def test_curves(self, workspace, tmp_path):
        run = workspace / "run1"
        if not (run / "frames").exists():
            run_pipeline(workspace, run)
        out = tmp_path / "curves.csv"
        code = cli.main([
            "analyze", "curves", "--corpus", str(workspace / "corpus.jsonl"),
            "--frames", str(run / "frames"), "--out", str(out),
            "--config", str(workspace / "config.toml"),
            "--set", f"cache_dir={tmp_path / 'cache'}",
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "series,index,value"
        kinds = {line.split(",")[0] for line in lines[1:]}
        assert kinds == {"start_caption", "end_caption", "consecutive"}
        assert sum(1 for l in lines[1:] if l.startswith("start_caption")) == 16
        assert sum(1 for l in lines[1:] if l.startswith("consecutive")) == 15

    def test_dynamics(self, tmp_path):
        from tceval.consistency import FlowField, write_flow_file

        flows_root = tmp_path / "flows"
        for vid, mag in (("v1", 4.0), ("v2", 0.0)):
            d = flows_root / vid
            d.mkdir(parents=True)
            for k in range(2):
                write_flow_file(
                    FlowField(u=np.full((4, 4), mag), v=np.zeros((4, 4))),
                    d / f"pair_{k:04d}.flow",
                )
        out = tmp_path / "dynamics.csv"
        assert cli.main(["analyze", "dynamics", "--flows", str(flows_root),
                         "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "video_id,dynamics_degree,all_masked_frames"
        rows = {l.split(",")[0]: l.split(",") for l in lines[1:]}
        assert float(rows["v1"][1]) == 4.0
        assert rows["v2"][2] == "2"

    def test_correlate(self, workspace, tmp_path):
        run = workspace / "run1"
        ratings = tmp_path / "ratings.csv"
        rows = ["video_id,annotator_id,q1,q2"]
        # ratings roughly ordered like the tc-scores: chameleon > ball > bench
        levels = {"chameleon-01": 5, "ball-01": 4, "bench-01": 2}
        for vid, q in levels.items():
            for ann in ("a1", "a2", "a3"):
                rows.append(f"{vid},{ann},{q},{min(5, q + 1)}")
        ratings.write_text("\n".join(rows) + "\n")
        out = tmp_path / "correlations.json"
        code = cli.main([
            "analyze", "correlate", "--metrics", str(run / "report.json"),
            "--ratings", str(ratings), "--out", str(out),
        ])
        assert code == 0
        grid = json.loads(out.read_text())
        assert grid["metric"] == "tc_score"
        assert grid["correlations"]["n"] == 3
        # ratings are ordered exactly like the tc-scores, so q1 correlates perfectly
        assert grid["correlations"]["q1"]["spearman_rho"] == pytest.approx(1.0)
        assert grid["human_upper_bound"]["q1"]["spearman_rho"] == pytest.approx(1.0)


class TestReportCommand:
    def test_csv_merge(self, workspace, tmp_path):
        run = workspace / "run1"
        out = tmp_path / "table.csv"
        assert cli.main([
            "report", "--inputs", str(run / "report.json"), "--format", "csv",
            "--out", str(out),
        ]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("model,attribute_tcr")
        assert lines[1].startswith("toy,100.00")

    def test_json_merge(self, workspace, tmp_path):
        run = workspace / "run1"
        out = tmp_path / "merged.json"
        assert cli.main([
            "report", "--inputs", str(run / "report.json"), "--format", "json",
            "--out", str(out),
        ]) == 0
        merged = json.loads(out.read_text())
        assert merged["report"]["overall"]["videos"] == 3


class TestSynthCommand:
    def test_synth_and_review_round_trip(self, tmp_path):
        script = tmp_path / "llm.json"
        script.write_text(json.dumps({
            "responses": [],
            "default": "A rose wilting from fresh red to dry brown.",
        }))
        config = tmp_path / "config.toml"
        config.write_text(f'[providers.llm]\nkind = "scripted"\nscript = "{script}"\n')
        drafts = tmp_path / "drafts.jsonl"
        assert cli.main([
            "synth", "--category", "attribute", "--count", "1",
            "--out", str(drafts), "--config", str(config),
        ]) == 0
        rec = json.loads(drafts.read_text().splitlines()[0])
        assert rec["reviewed"] is False
        rec["reviewed"] = True
        rec["transition_object"] = "rose"
        drafts.write_text(json.dumps(rec) + "\n")
        corpus_out = tmp_path / "reviewed.jsonl"
        assert cli.main([
            "synth", "--review", "--drafts", str(drafts), "--corpus", str(corpus_out),
            "--config", str(config),
        ]) == 0
        from tceval.corpus import load_corpus

        manifest = load_corpus(corpus_out, "T2V")
        assert manifest.prompts[0].start_value == "fresh red"

    def test_unreviewed_drafts_blocked(self, tmp_path):
        drafts = tmp_path / "drafts.jsonl"
        drafts.write_text(json.dumps({
            "id": "d1", "category": "attribute",
            "text": "A rose wilting from fresh red to dry brown.",
            "start_value": "fresh red", "end_value": "dry brown",
            "transition_object": "rose", "reviewed": False,
        }) + "\n")
        code = cli.main([
            "synth", "--review", "--drafts", str(drafts),
            "--corpus", str(tmp_path / "out.jsonl"),
        ])
        assert code == cli.EXIT_VALIDATION
