from __future__ import annotations

import functools

import numpy as np
import pytest

from tceval.video_io import (
    FrameSequence,
    VideoError,
    compose_horizontal,
    decode_png,
    encode_png,
    equal_gap_indices,
    extract_frames,
    frame_hash,
    list_frame_dirs,
    read_frame_dir,
    remap_index,
    resample_equal_gaps,
    write_frame_dir,
)

from conftest import gradient_sequence, solid_frame


def minimal_deviation_indices(k: int, n: int) -> list[int]:
    """Oracle: strictly increasing n-subset of 1..k minimizing the maximum
    deviation from ideal uniform spacing, lexicographically smallest on ties.

    Dynamic program over (position, next allowed index); equivalent to
    enumerating every monotone subset.
    """
    ideal = [1 + j * (k - 1) / (n - 1) for j in range(n)] if n > 1 else [1.0]

    @functools.lru_cache(maxsize=None)
    def best(j: int, lo: int) -> float:
        if j == n:
            return 0.0
        if lo > k:
            return float("inf")
        out = float("inf")
        for idx in range(lo, k - (n - 1 - j) + 1):
            out = min(out, max(abs(idx - ideal[j]), best(j + 1, idx + 1)))
        return out

    opt = best(0, 1)
    picks, lo = [], 1
    for j in range(n):
        for idx in range(lo, k - (n - 1 - j) + 1):
            if max(abs(idx - ideal[j]), best(j + 1, idx + 1)) <= opt + 1e-12:
                picks.append(idx)
                lo = idx + 1
                break
    return picks


class TestEqualGapIndices:
    def test_identity_when_counts_match(self):
        assert equal_gap_indices(16, 16) == list(range(1, 17))

    def test_exact_step_two(self):
        assert equal_gap_indices(31, 16) == list(range(1, 32, 2))

    def test_k29_matches_minimal_deviation_oracle(self):
        formula = equal_gap_indices(29, 16)
        oracle = minimal_deviation_indices(29, 16)
        assert max(abs(a - b) for a, b in zip(formula, oracle)) <= 1
        assert formula == oracle  # the rounding formula hits the canonical answer

    def test_single_index(self):
        assert equal_gap_indices(29, 1) == [1]

    def test_properties_exhaustive_k_up_to_64(self):
        for k in range(1, 65):
            for n in range(1, k + 1):
                idx = equal_gap_indices(k, n)
                assert len(idx) == n
                assert all(1 <= i <= k for i in idx)
                assert all(b > a for a, b in zip(idx, idx[1:]))
                if n >= 2:
                    assert idx[0] == 1 and idx[-1] == k

    def test_rejects_bad_counts(self):
        with pytest.raises(VideoError):
            equal_gap_indices(5, 6)
        with pytest.raises(VideoError):
            equal_gap_indices(5, 0)


class TestResample:
    def test_idempotent_on_matching_count(self):
        seq = gradient_sequence(16)
        assert resample_equal_gaps(seq, 16) is seq

    def test_selects_endpoints(self):
        seq = gradient_sequence(29)
        out = resample_equal_gaps(seq, 16)
        assert len(out) == 16
        assert np.array_equal(out.frames[0], seq.frames[0])
        assert np.array_equal(out.frames[-1], seq.frames[-1])


class TestRemapIndex:
    def test_identity_for_canonical_length(self):
        assert [remap_index(i, 16) for i in range(1, 17)] == list(range(1, 17))

    def test_endpoints_map_to_endpoints(self):
        for k in (2, 5, 29, 61):
            assert remap_index(1, k) == 1
            assert remap_index(16, k) == k

    def test_out_of_range(self):
        with pytest.raises(VideoError):
            remap_index(17, 29)


class TestCompose:
    def test_single_member_identity(self):
        seq = gradient_sequence(16)
        comp = compose_horizontal(seq, [7])
        assert np.array_equal(comp.image, seq.frames[6])
        assert comp.member_indices == [7]

    def test_five_uniform_members_width(self):
        seq = gradient_sequence(16, width=64, height=48)
        comp = compose_horizontal(seq, [1, 5, 9, 13, 16])
        assert comp.image.shape == (48, 64 * 5, 3)
        assert comp.member_indices == [1, 5, 9, 13, 16]

    def test_reorders_descending_indices(self):
        seq = gradient_sequence(16)
        comp = compose_horizontal(seq, [3, 1])
        assert comp.member_indices == [1, 3]
        assert np.array_equal(comp.image[:, :64], seq.frames[0])

    def test_mixed_resolutions_rejected_at_sequence_construction(self):
        small = solid_frame((10, 20, 30), 64, 48)
        big = np.kron(small, np.ones((2, 2, 1))).astype(np.uint8)
        with pytest.raises(VideoError, match="resolution"):
            FrameSequence(frames=[big, small], fps=8.0, source_id="b")

    def test_out_of_range_names_index_and_length(self):
        seq = gradient_sequence(4)
        with pytest.raises(VideoError, match="index 9 out of range 1..4"):
            compose_horizontal(seq, [9])

    def test_too_many_members(self):
        seq = gradient_sequence(16)
        with pytest.raises(VideoError, match="1..5"):
            compose_horizontal(seq, [1, 2, 3, 4, 5, 6])


class TestFrameDirCache:
    def test_png_round_trip_is_lossless(self):
        frame = gradient_sequence(1).frames[0]
        assert np.array_equal(decode_png(encode_png(frame)), frame)

    def test_write_read_round_trip(self, tmp_path):
        seq = gradient_sequence(5, source_id="vid-a")
        write_frame_dir(seq, tmp_path, "deadbeef")
        loaded = read_frame_dir(tmp_path / "deadbeef")
        assert loaded.source_id == "vid-a"
        assert loaded.fps == 8.0
        assert len(loaded) == 5
        for a, b in zip(loaded.frames, seq.frames):
            assert np.array_equal(a, b)

    def test_list_frame_dirs(self, tmp_path):
        write_frame_dir(gradient_sequence(2, source_id="v1"), tmp_path, "aa")
        write_frame_dir(gradient_sequence(2, source_id="v2", seed=5), tmp_path, "bb")
        dirs = list_frame_dirs(tmp_path)
        assert sorted(dirs) == ["v1", "v2"]

    def test_frame_hash_distinguishes_content(self):
        a = solid_frame((1, 2, 3))
        b = solid_frame((1, 2, 4))
        assert frame_hash(a) != frame_hash(b)
        assert frame_hash(a) == frame_hash(a.copy())


@pytest.fixture
def toy_video(tmp_path):
    import cv2

    path = tmp_path / "toy.mp4"
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"mp4v"), 8, (64, 48))
    assert writer.isOpened(), "mp4 encoder unavailable in this build"
    for i in range(16):
        writer.write(np.full((48, 64, 3), (i * 15) % 250, np.uint8))
    writer.release()
    return path


class TestExtractFrames:
    def test_two_second_video_at_8fps_gives_16_frames(self, toy_video):
        seq = extract_frames(toy_video, fps=8.0, count=16)
        assert len(seq) == 16
        assert seq.source_id == "toy"

    def test_count_one_returns_middle_frame(self, toy_video):
        seq = extract_frames(toy_video, fps=8.0, count=1)
        assert len(seq) == 1

    def test_deterministic_for_fixed_file(self, toy_video):
        a = extract_frames(toy_video, fps=8.0, count=16)
        b = extract_frames(toy_video, fps=8.0, count=16)
        for fa, fb in zip(a.frames, b.frames):
            assert np.array_equal(fa, fb)

    def test_too_few_frames_is_an_error(self, toy_video):
        with pytest.raises(VideoError, match="need 60"):
            extract_frames(toy_video, fps=8.0, count=60)

    def test_missing_file(self, tmp_path):
        with pytest.raises(VideoError):
            extract_frames(tmp_path / "nope.mp4")

    def test_longer_decode_resampled(self, tmp_path):
        import cv2

        path = tmp_path / "toy29.mp4"
        writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"mp4v"), 8, (64, 48))
        for i in range(29):
            writer.write(np.full((48, 64, 3), (i * 8) % 250, np.uint8))
        writer.release()
        seq = extract_frames(path, fps=8.0, count=16)
        assert len(seq) == 16
