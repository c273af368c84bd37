"""
Collecting human ratings: task pool, journal, and export
========================================================

Every video is assigned to three distinct annotators by round-robin at pool
creation; an annotator polls for their next open task, rates it on two
5-point questions, and the journal compacts into the same CSV schema the
analysis side imports.  This script drives the pool in process; `tceval
annotate serve` exposes the identical operations over HTTP for the browser UI.
"""

import tempfile
from pathlib import Path

from tceval.analysis import aggregate_ratings, read_ratings_csv
from tceval.annotation import TaskPool, VideoItem

workdir = Path(tempfile.mkdtemp(prefix="tceval-annot-"))
journal = workdir / "journal.jsonl"

videos = [
    VideoItem(video_id=f"gen-{i:02d}", prompt=f"prompt {i}", video_ref=f"/videos/gen-{i:02d}.mp4")
    for i in range(4)
]
annotators = ["ann-1", "ann-2", "ann-3", "ann-4"]
pool = TaskPool.create(videos, annotators, journal_path=journal)
print("pool:", pool.progress())

# Each annotator works through their queue.  Assignment is sticky: polling
# again before rating returns the same task, and a skip (e.g. the video
# failed to load) releases it permanently with a recorded reason.
scripted_scores = {"ann-1": (5, 5), "ann-2": (4, 4), "ann-3": (4, 5), "ann-4": (3, 3)}
for ann in annotators:
    while (task := pool.next_task(ann)) is not None:
        q1, q2 = scripted_scores[ann]
        pool.submit_rating(ann, task.task_id, q1, q2)

print("after rating:", pool.progress())

# The journal survives restarts: a fresh pool replays it to the same state.
recovered = TaskPool.create(videos, annotators)
recovered.replay_journal(journal)
assert recovered.export_csv() == pool.export_csv()
print("journal replay reproduces the export")

# Export feeds straight into the analysis import and aggregation.
csv_path = workdir / "ratings.csv"
csv_path.write_text(pool.export_csv(), encoding="utf-8")
ratings = read_ratings_csv(csv_path)
agg = aggregate_ratings(ratings)
for v in agg.videos:
    flags = []
    if v.completion:
        flags.append("completion")
    if v.consistency_eligible:
        flags.append("consistency-eligible")
    print(f"  {v.video_id}: mean q1 {v.mean_q1:.2f}, q2 {v.mean_q2:.2f} "
          f"[{', '.join(flags) or 'no flags'}]")
