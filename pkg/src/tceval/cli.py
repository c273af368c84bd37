"""Command-line pipeline: extract, assert, verify, score, consistency,
analyze, annotate, report, synth.

Stages are resumable and idempotent: every expensive call is cached by
content hash, artifacts are written deterministically (sorted keys, no
timestamps), and re-running a stage with unchanged inputs reproduces
byte-identical outputs.  Exit codes: 0 success, 2 validation error,
3 provider failure, 4 success with degraded verdicts present.

Videos are matched to prompts by file stem: a stem is either the prompt id
itself or ``<prompt_id>__<replicate>`` for multiple videos per prompt.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import analysis, annotation, assertions, consistency, corpus, verifier, video_io
from .cache import FileCache
from .config import (
    Config,
    ConfigError,
    build_embedding_provider,
    build_text_client,
    build_vision_client,
    config_to_dict,
    load_config,
)
from .providers import ProviderError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PROVIDER = 3
EXIT_PARTIAL = 4

VIDEO_SUFFIXES = (".mp4", ".avi", ".mov", ".mkv", ".webm", ".gif")


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_VALIDATION):
        self.code = code
        super().__init__(message)


def prompt_id_for_video(video_id: str) -> str:
    return video_id.split("__", 1)[0]


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def _write_provenance(out: Path, command: str, cfg: Config, inputs: dict) -> None:
    payload = {"command": command, "config": config_to_dict(cfg), "inputs": inputs}
    _write_json(out.with_name(out.stem + ".provenance.json"), payload)


def _load_cfg(args) -> Config:
    overrides = {}
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise CliError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return load_config(getattr(args, "config", None), overrides)


# ---------------------------------------------------------------------------
# extract


def cmd_extract(args) -> int:
    cfg = _load_cfg(args)
    fps = args.fps if args.fps is not None else cfg.constants.fps
    count = args.frames if args.frames is not None else cfg.constants.frames
    videos_dir = Path(args.videos)
    out_dir = Path(args.out)
    files = sorted(
        p for p in videos_dir.iterdir() if p.suffix.lower() in VIDEO_SUFFIXES
    ) if videos_dir.is_dir() else []
    if not files:
        raise CliError(f"no video files under {videos_dir}")
    index: dict[str, str] = {}
    for path in files:
        digest = video_io.file_content_hash(path)[:16]
        target = out_dir / digest
        if not (target / "meta.json").exists():
            seq = video_io.extract_frames(path, fps=fps, count=count)
            video_io.write_frame_dir(seq, out_dir, digest)
        index[path.stem] = digest
    _write_json(out_dir / "index.json", index)
    _write_provenance(out_dir / "frames", "extract", cfg, {"videos": videos_dir.name})
    print(f"extracted {len(files)} videos -> {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# assert


def cmd_assert(args) -> int:
    cfg = _load_cfg(args)
    manifest = corpus.load_corpus(args.corpus, schema=args.schema)
    counts = manifest.category_counts()
    print(
        f"corpus {manifest.name}: {len(manifest.prompts)} prompts "
        + ", ".join(f"{c}={n}" for c, n in sorted(counts.items()))
    )
    llm = build_text_client(cfg)
    cache = FileCache(cfg.resolved_cache_dir() / "assertions")
    model_name = cfg.llm.fingerprint()
    records = []
    for prompt in manifest.prompts:
        aset, raw = assertions.generate_assertions(prompt, llm, model_name, cache=cache)
        records.append(assertions.set_to_record(aset, category=prompt.category, raw=raw))
    out = Path(args.out)
    assertions.save_assertion_records(records, out)
    _write_provenance(out, "assert", cfg, {"corpus": Path(args.corpus).name})
    print(f"wrote {len(records)} assertion sets -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _remap_assertion(a: assertions.Assertion, k: int, canonical: int) -> assertions.Assertion:
    remapped = sorted({video_io.remap_index(i, k, canonical) for i in a.frame_indices})
    return assertions.Assertion(
        id=a.id, dimension=a.dimension, frame_indices=tuple(remapped), question=a.question
    )


def cmd_verify(args) -> int:
    cfg = _load_cfg(args)
    canonical = cfg.constants.frames
    records = assertions.load_assertion_records(args.assertions)
    if not records:
        raise CliError(f"no assertion sets in {args.assertions}; run `tceval assert` first")
    frame_dirs = video_io.list_frame_dirs(args.frames)
    if not frame_dirs:
        raise CliError(f"no frame directories under {args.frames}; run `tceval extract` first")
    vlm = build_vision_client(cfg)
    cache = FileCache(cfg.resolved_cache_dir() / "verdicts")
    model_name = cfg.vlm.fingerprint()

    out_records: list[dict] = []
    degraded = 0
    for rec in records:
        aset = assertions.record_to_set(rec)
        category = str(rec.get("category", ""))
        video_ids = sorted(
            vid for vid in frame_dirs if prompt_id_for_video(vid) == aset.prompt_id
        )
        if not video_ids:
            raise CliError(
                f"no frames for prompt {aset.prompt_id!r} under {args.frames}; "
                "run `tceval extract` on its videos first"
            )
        for vid in video_ids:
            seq = video_io.read_frame_dir(frame_dirs[vid])
            if args.resample_first and len(seq) != canonical:
                seq = video_io.resample_equal_gaps(seq, canonical)
            k = len(seq)
            todo = [
                a if k == canonical else _remap_assertion(a, k, canonical)
                for a in aset.assertions
            ]

            def judge_one(a):
                return verifier.verify_assertion(
                    a, seq, vlm, model_name=model_name, cache=cache,
                    preamble=cfg.constants.judge_preamble,
                )

            workers = max(1, cfg.vlm.max_in_flight)
            if workers > 1 and len(todo) > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    verdicts = list(pool.map(judge_one, todo))
            else:
                verdicts = [judge_one(a) for a in todo]
            for a, v in zip(todo, verdicts):
                degraded += int(v.degraded)
                out_records.append(
                    verifier.verdict_record(aset.prompt_id, category, vid, a.dimension, v)
                )

    out = Path(args.out)
    verifier.save_verdict_records(out_records, out)
    _write_provenance(out, "verify", cfg, {
        "assertions": Path(args.assertions).name,
        "frames": Path(args.frames).name,
        "index_mode": "resample-first" if args.resample_first else "remap",
    })
    print(f"wrote {len(out_records)} verdicts -> {out} (degraded: {degraded})")
    return EXIT_PARTIAL if degraded else EXIT_OK


# ---------------------------------------------------------------------------
# score


def _group_verdicts(records: list[dict]):
    """(prompt_id, video_id) -> (assertion set skeleton, verdict list, category)."""
    groups: dict[tuple[str, str], dict] = {}
    for rec in records:
        key = (str(rec["prompt_id"]), str(rec["video_id"]))
        g = groups.setdefault(key, {"asserts": [], "verdicts": [], "category": ""})
        g["category"] = str(rec.get("category", "")) or g["category"]
        g["asserts"].append(
            assertions.Assertion(
                id=str(rec["assertion_id"]),
                dimension=str(rec["dimension"]),
                frame_indices=(1,),
                question="(recorded)?",
            )
        )
        g["verdicts"].append(
            verifier.Verdict(
                assertion_id=str(rec["assertion_id"]),
                answer=str(rec["answer"]),
                raw_response=str(rec.get("raw_response", "")),
                degraded=bool(rec.get("degraded", False)),
            )
        )
    return groups


def cmd_score(args) -> int:
    cfg = _load_cfg(args)
    records = verifier.load_verdict_records(args.verdicts)
    if not records:
        raise CliError(f"no verdicts in {args.verdicts}; run `tceval verify` first")
    groups = _group_verdicts(records)

    evals: list[verifier.VideoEvaluation] = []
    categories: dict[str, str] = {}
    for (prompt_id, video_id), g in sorted(groups.items()):
        aset = assertions.AssertionSet(prompt_id=prompt_id, assertions=g["asserts"])
        ev = verifier.evaluate_video(prompt_id, video_id, g["verdicts"], aset)
        categories[prompt_id] = g["category"] or "uncategorized"
        evals.append(ev)

    if args.mode == "i2v":
        if not args.embeddings:
            raise CliError(
                "score --mode i2v needs --embeddings DIR; run "
                "`tceval consistency --metric consecutive --embeddings-out DIR` first"
            )
        for ev in evals:
            embeds = consistency.load_video_embeddings(args.embeddings, ev.video_id)
            if args.ref == "groundtruth":
                if not args.ref_embeddings:
                    raise CliError("--ref groundtruth needs --ref-embeddings DIR")
                ref = consistency.load_video_embeddings(args.ref_embeddings, ev.prompt_id)
                score = consistency.framewise_consistency(
                    embeds, ref, cfg.constants.sim_low, cfg.constants.sim_high
                )
            else:
                score = consistency.consecutive_consistency(
                    embeds, cfg.constants.sim_low, cfg.constants.sim_high
                )
            ev.tc_score = consistency.tc_score_i2v(
                ev.tc_score, score, cfg.constants.w1, cfg.constants.w2
            )

    if args.per_prompt_best:
        best: dict[str, verifier.VideoEvaluation] = {}
        for ev in evals:
            cur = best.get(ev.prompt_id)
            if cur is None or (ev.tc, ev.tc_score, ev.video_id) > (
                cur.tc, cur.tc_score, cur.video_id
            ):
                best[ev.prompt_id] = ev
        evals = [best[p] for p in sorted(best)]

    report = verifier.aggregate_report(evals, categories, model=args.model)
    payload = verifier.report_to_dict(report, videos=evals)
    payload["mode"] = args.mode
    payload["per_prompt_best"] = bool(args.per_prompt_best)
    payload["config"] = config_to_dict(cfg)
    out = Path(args.out)
    _write_json(out, payload)
    csv_path = out.with_suffix(".csv")
    csv_path.write_text(verifier.report_to_csv(report), encoding="utf-8")
    print(f"TCR {report.overall.tcr:.2f} | mean TC-Score {report.overall.mean_tc_score:.4f} "
          f"over {report.overall.videos} videos -> {out}")
    return EXIT_PARTIAL if report.degraded_fraction > 0 else EXIT_OK


# ---------------------------------------------------------------------------
# consistency


def _resampled_sequence(path: Path, frames: int) -> video_io.FrameSequence:
    seq = video_io.read_frame_dir(path)
    if len(seq) != frames:
        seq = video_io.resample_equal_gaps(seq, frames)
    return seq


def cmd_consistency(args) -> int:
    cfg = _load_cfg(args)
    frames = cfg.constants.frames
    low, high = cfg.constants.sim_low, cfg.constants.sim_high
    out = Path(args.out)
    results: list[dict] = []

    if args.metric in ("consecutive", "framewise"):
        frame_dirs = video_io.list_frame_dirs(args.frames)
        if not frame_dirs:
            raise CliError(f"no frame directories under {args.frames}; run `tceval extract` first")
        provider = build_embedding_provider(cfg)
        cache_dir = cfg.resolved_cache_dir() / "embeddings"
        ref_dirs = video_io.list_frame_dirs(args.ref) if args.ref else {}
        for vid in sorted(frame_dirs):
            seq = _resampled_sequence(frame_dirs[vid], frames)
            embeds = consistency.embed_frames(seq, provider, cache_dir=cache_dir)
            if args.embeddings_out:
                consistency.save_video_embeddings(args.embeddings_out, vid, embeds)
            if args.metric == "consecutive":
                score = consistency.consecutive_consistency(embeds, low, high)
            else:
                if not args.ref:
                    raise CliError("--metric framewise needs --ref DIR of ground-truth frames")
                pid = prompt_id_for_video(vid)
                if pid not in ref_dirs:
                    raise CliError(f"no ground-truth frames for prompt {pid!r} under {args.ref}")
                ref_seq = _resampled_sequence(ref_dirs[pid], frames)
                ref_embeds = consistency.embed_frames(ref_seq, provider, cache_dir=cache_dir)
                if args.embeddings_out:
                    consistency.save_video_embeddings(
                        Path(args.embeddings_out) / "ref", pid, ref_embeds
                    )
                score = consistency.framewise_consistency(embeds, ref_embeds, low, high)
            results.append({
                "video_id": vid,
                "metric": args.metric,
                "raw_similarities": score.raw_similarities,
                "mapped": score.mapped,
                "mean_mapped": score.mean_mapped,
            })
    elif args.metric == "epe":
        flows_root = Path(args.flows or args.frames)
        if not args.ref:
            raise CliError("--metric epe needs --ref DIR of reference flow files")
        for video_dir in sorted(p for p in flows_root.iterdir() if p.is_dir()):
            vid = video_dir.name
            ref_dir = Path(args.ref) / prompt_id_for_video(vid)
            if not ref_dir.is_dir():
                raise CliError(f"no reference flows for {vid!r} at {ref_dir}")
            flows = consistency.read_flow_dir(video_dir)
            refs = consistency.read_flow_dir(ref_dir)
            refs = [
                consistency.resize_flow(r, flows[0].width, flows[0].height) for r in refs
            ]
            results.append({"video_id": vid, "metric": "epe",
                            "value": consistency.epe(flows, refs)})
    elif args.metric == "ate":
        traj_root = Path(args.trajectories or args.frames)
        if not args.ref:
            raise CliError("--metric ate needs --ref DIR of reference trajectory CSVs")
        for csv_file in sorted(traj_root.glob("*.csv")):
            vid = csv_file.stem
            ref_file = Path(args.ref) / f"{prompt_id_for_video(vid)}.csv"
            if not ref_file.exists():
                raise CliError(f"no reference trajectory for {vid!r} at {ref_file}")
            traj = consistency.read_trajectory_csv(csv_file)
            ref = consistency.read_trajectory_csv(ref_file)
            results.append({"video_id": vid, "metric": "ate",
                            "value": consistency.ate(traj, ref)})
    if not results:
        raise CliError(f"no inputs found for --metric {args.metric}")

    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as f:
        for rec in results:
            f.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
    _write_provenance(out, "consistency", cfg, {"metric": args.metric})
    print(f"wrote {len(results)} consistency records -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze


def cmd_analyze_curves(args) -> int:
    cfg = _load_cfg(args)
    frames = cfg.constants.frames
    manifest = corpus.load_corpus(args.corpus, schema=args.schema)
    frame_dirs = video_io.list_frame_dirs(args.frames)
    provider = build_embedding_provider(cfg)
    cache_dir = cfg.resolved_cache_dir() / "embeddings"
    starts, ends, consecutives = [], [], []
    for prompt in manifest.prompts:
        if prompt.category != "attribute":
            continue
        vids = sorted(v for v in frame_dirs if prompt_id_for_video(v) == prompt.id)
        for vid in vids:
            seq = _resampled_sequence(frame_dirs[vid], frames)
            embeds = consistency.embed_frames(seq, provider, cache_dir=cache_dir)
            s, e = analysis.attribute_curves(prompt, embeds, provider)
            starts.append(s)
            ends.append(e)
            consecutives.append(analysis.consecutive_curve(embeds))
    if not starts:
        raise CliError("no attribute-category videos found to build curves from")
    series = [
        analysis.mean_curves(starts),
        analysis.mean_curves(ends),
        analysis.mean_curves(consecutives),
    ]
    out = Path(args.out)
    analysis.write_curves_csv(series, out)
    _write_provenance(out, "analyze curves", cfg, {"corpus": Path(args.corpus).name})
    trends = {s.kind: analysis.curve_trend(s) for s in series}
    print(f"wrote curves over {len(starts)} videos -> {out}; trends {trends}")
    return EXIT_OK


def cmd_analyze_dynamics(args) -> int:
    cfg = _load_cfg(args)
    threshold = args.threshold if args.threshold is not None else cfg.constants.static_threshold
    flows_root = Path(args.flows)
    rows = []
    for video_dir in sorted(p for p in flows_root.iterdir() if p.is_dir()):
        flows = consistency.read_flow_dir(video_dir)
        res = analysis.dynamics_degree(flows, static_threshold=threshold)
        rows.append((video_dir.name, res.value, len(res.all_masked_frames)))
    if not rows:
        raise CliError(f"no per-video flow directories under {flows_root}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = ["video_id,dynamics_degree,all_masked_frames"]
    lines += [f"{vid},{val!r},{masked}" for vid, val, masked in rows]
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_provenance(out, "analyze dynamics", cfg, {"threshold": threshold})
    print(f"wrote dynamics for {len(rows)} videos -> {out}")
    return EXIT_OK


def cmd_analyze_correlate(args) -> int:
    cfg = _load_cfg(args)
    report = json.loads(Path(args.metrics).read_text(encoding="utf-8"))
    videos = report.get("videos")
    if not videos:
        raise CliError(
            f"{args.metrics} has no per-video scores; produce it with `tceval score`"
        )
    field = args.metric_field
    try:
        metric_scores = {str(v["video_id"]): float(v[field]) for v in videos}
    except KeyError:
        raise CliError(f"per-video records lack field {field!r}")
    ratings = analysis.read_ratings_csv(args.ratings)
    grid = analysis.correlation_grid(
        metric_scores, ratings, divisive_spread=cfg.constants.divisive_spread
    )
    payload = {"metric": field, "correlations": grid}
    try:
        upper = {
            q: vars(analysis.inter_annotator_correlation(ratings, question=q))
            for q in ("q1", "q2")
        }
        payload["human_upper_bound"] = upper
    except analysis.AnalysisError:
        payload["human_upper_bound"] = None
    payload["config"] = config_to_dict(cfg)
    _write_json(Path(args.out), payload)
    print(
        f"{field}: q1 rho={grid['q1']['spearman_rho']:.4f} tau={grid['q1']['kendall_tau']:.4f} "
        f"| q2 rho={grid['q2']['spearman_rho']:.4f} tau={grid['q2']['kendall_tau']:.4f} "
        f"(n={grid['n']}) -> {args.out}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# annotate


def cmd_annotate_serve(args) -> int:
    journal = Path(args.journal) if args.journal else Path(args.pool).with_suffix(".journal.jsonl")
    pool = annotation.TaskPool.from_pool_file(args.pool, journal_path=journal)
    annotation.serve(
        pool,
        port=args.port,
        ui_dir=Path(args.ui) if args.ui else None,
        video_dir=Path(args.videos) if args.videos else None,
    )
    return EXIT_OK


def cmd_annotate_export(args) -> int:
    journal = Path(args.journal) if args.journal else Path(args.pool).with_suffix(".journal.jsonl")
    if not journal.exists():
        raise CliError(f"no journal at {journal}; serve and collect ratings first")
    csv_text = annotation.export_journal_csv(args.pool, journal)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(csv_text, encoding="utf-8")
        print(f"exported ratings -> {args.out}")
    else:
        sys.stdout.write(csv_text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# report


def cmd_report(args) -> int:
    inputs = [Path(p) for p in args.inputs]
    loaded = []
    for p in inputs:
        if not p.exists():
            raise CliError(f"input not found: {p}")
        loaded.append((p.stem, json.loads(p.read_text(encoding="utf-8"))))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        _write_json(out, {name: data for name, data in loaded})
    else:
        cats = ("attribute", "object_relation", "background")
        header = ["model"]
        for c in cats + ("overall",):
            header += [f"{c}_tcr", f"{c}_tc_score"]
        lines = [",".join(header)]
        for name, data in loaded:
            if "overall" not in data:
                continue  # correlation grids only render to JSON
            row = [data.get("model") or name]
            per_cat = data.get("per_category", {})
            for c in cats:
                s = per_cat.get(c)
                row += (
                    [f"{s['tcr']:.2f}", f"{s['mean_tc_score']:.4f}"] if s else ["", ""]
                )
            o = data["overall"]
            row += [f"{o['tcr']:.2f}", f"{o['mean_tc_score']:.4f}"]
            lines.append(",".join(row))
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote report -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    cfg = _load_cfg(args)
    if args.review:
        if not args.drafts or not args.corpus:
            raise CliError("--review needs --drafts FILE and --corpus FILE")
        drafts = corpus.load_drafts(args.drafts)
        admitted = corpus.admit_reviewed_drafts(drafts)
        if not admitted:
            raise CliError("no drafts are marked reviewed; edit the drafts file first")
        manifest = corpus.CorpusManifest(name=args.schema, prompts=admitted)
        corpus.save_corpus(manifest, args.corpus)
        print(f"admitted {len(admitted)} reviewed prompts -> {args.corpus}")
        return EXIT_OK
    if not args.out:
        raise CliError("synth needs --out FILE for the drafts")
    llm = build_text_client(cfg)
    drafts, rejected = corpus.synthesize_prompts(args.category, llm, args.count)
    corpus.save_drafts(drafts, args.out)
    for text, reason in rejected:
        print(f"rejected: {reason}: {text}", file=sys.stderr)
    print(f"wrote {len(drafts)} unreviewed drafts -> {args.out} "
          f"({len(rejected)} rejected)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tceval",
        description="Evaluation harness for temporal transition completion in generated videos.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config value, e.g. constants.frames=16")

    p = sub.add_parser("extract", help="decode videos into cached frame directories")
    p.add_argument("--videos", required=True)
    p.add_argument("--fps", type=float, default=None)
    p.add_argument("--frames", type=int, default=None)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("assert", help="generate assertion sets for a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--schema", choices=corpus.MANIFEST_KINDS, default="T2V")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_assert)

    p = sub.add_parser("verify", help="judge assertions against extracted frames")
    p.add_argument("--assertions", required=True)
    p.add_argument("--frames", required=True)
    p.add_argument("--out", required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--remap", action="store_true", default=True,
                      help="remap canonical indices onto the video's frame count (default)")
    mode.add_argument("--resample-first", dest="resample_first", action="store_true",
                      help="equal-gap resample the video to the canonical count instead")
    common(p)
    p.set_defaults(func=cmd_verify, resample_first=False)

    p = sub.add_parser("score", help="compute completion metrics from verdicts")
    p.add_argument("--verdicts", required=True)
    p.add_argument("--mode", choices=("t2v", "i2v"), required=True)
    p.add_argument("--embeddings", help="per-video embedding dir (i2v mode)")
    p.add_argument("--ref", choices=("consecutive", "groundtruth"), default="consecutive")
    p.add_argument("--ref-embeddings", dest="ref_embeddings",
                   help="ground-truth embedding dir for --ref groundtruth")
    p.add_argument("--model", default="model", help="model name for the report")
    p.add_argument("--per-prompt-best", dest="per_prompt_best", action="store_true",
                   help="aggregate over the best replicate per prompt instead of all videos")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("consistency", help="frame-consistency metrics")
    p.add_argument("--frames", required=True,
                   help="frame dirs (embedding metrics) or per-video metric inputs")
    p.add_argument("--metric", choices=("consecutive", "framewise", "epe", "ate"),
                   required=True)
    p.add_argument("--ref", help="reference frames/flows/trajectories directory")
    p.add_argument("--flows", help="per-video flow-file directories (epe)")
    p.add_argument("--trajectories", help="per-video trajectory CSVs (ate)")
    p.add_argument("--embeddings-out", dest="embeddings_out",
                   help="save per-video embedding matrices here")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_consistency)

    p = sub.add_parser("analyze", help="curves, dynamics, and correlation analyses")
    asub = p.add_subparsers(dest="analysis", required=True)

    pc = asub.add_parser("curves", help="attribute-existence and consistency curves")
    pc.add_argument("--corpus", required=True)
    pc.add_argument("--schema", choices=corpus.MANIFEST_KINDS, default="T2V")
    pc.add_argument("--frames", required=True)
    pc.add_argument("--out", required=True)
    common(pc)
    pc.set_defaults(func=cmd_analyze_curves)

    pd = asub.add_parser("dynamics", help="masked mean flow magnitude per video")
    pd.add_argument("--flows", required=True)
    pd.add_argument("--threshold", type=float, default=None)
    pd.add_argument("--out", required=True)
    common(pd)
    pd.set_defaults(func=cmd_analyze_dynamics)

    pr = asub.add_parser("correlate", help="rank correlations against human ratings")
    pr.add_argument("--metrics", required=True, help="report JSON with per-video scores")
    pr.add_argument("--metric-field", dest="metric_field", default="tc_score")
    pr.add_argument("--ratings", required=True, help="ratings CSV")
    pr.add_argument("--out", required=True)
    common(pr)
    pr.set_defaults(func=cmd_analyze_correlate)

    p = sub.add_parser("annotate", help="serve the rating UI or export ratings")
    nsub = p.add_subparsers(dest="annotate_cmd", required=True)

    ps = nsub.add_parser("serve", help="run the annotation HTTP service")
    ps.add_argument("--pool", required=True)
    ps.add_argument("--port", type=int, default=8787)
    ps.add_argument("--journal")
    ps.add_argument("--ui", help="static UI bundle directory")
    ps.add_argument("--videos", help="video asset directory")
    common(ps)
    ps.set_defaults(func=cmd_annotate_serve)

    pe = nsub.add_parser("export", help="compact the journal into the ratings CSV")
    pe.add_argument("--pool", required=True)
    pe.add_argument("--journal")
    pe.add_argument("--out")
    common(pe)
    pe.set_defaults(func=cmd_annotate_export)

    p = sub.add_parser("report", help="merge score/correlation outputs into one table")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="draft new prompts, or admit reviewed drafts")
    p.add_argument("--category", choices=corpus.CATEGORIES)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--out", help="drafts file to write")
    p.add_argument("--review", action="store_true",
                   help="admit drafts marked reviewed into a corpus")
    p.add_argument("--drafts", help="drafts file to review")
    p.add_argument("--corpus", help="corpus file to write on review")
    p.add_argument("--schema", choices=corpus.MANIFEST_KINDS, default="T2V")
    common(p)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProviderError as exc:
        print(f"provider failure: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (
        corpus.CorpusError,
        video_io.VideoError,
        assertions.AssertionEngineError,
        verifier.VerifierError,
        consistency.ConsistencyError,
        analysis.AnalysisError,
        annotation.AnnotationError,
        ConfigError,
        FileNotFoundError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
