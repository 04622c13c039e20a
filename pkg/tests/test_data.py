import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from madtwinnet.data import (
    SequenceConfig,
    TrackPair,
    ideal_amplitude_mask,
    ideal_ratio_mask,
    list_tracks,
    load_dataset,
    make_subsequences,
    make_training_target,
    overlap_reconstruct,
    synth_fixture,
    write_track,
)
from madtwinnet.exceptions import DatasetLayoutError, InvalidArgumentError


class TestMasks:
    def test_ratio_masks_partition_unity(self, rng):
        mags = [np.abs(rng.standard_normal((7, 9))) + 0.01 for _ in range(3)]
        masks = [ideal_ratio_mask(mags, j) for j in range(3)]
        for m in masks:
            assert np.all((m >= 0) & (m <= 1))
        np.testing.assert_allclose(sum(masks), 1.0, atol=1e-12)

    def test_silent_bins_give_zero_mask(self):
        mags = [np.zeros((2, 3)), np.zeros((2, 3))]
        assert np.all(ideal_ratio_mask(mags, 0) == 0)

    def test_amplitude_mask_can_exceed_one(self):
        # destructive interference: source louder than mixture
        assert ideal_amplitude_mask(np.array([[2.0]]), np.array([[0.5]]))[0, 0] == 4.0

    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            ideal_ratio_mask([np.ones((2, 2)), np.ones((2, 3))], 0)
        with pytest.raises(InvalidArgumentError):
            ideal_amplitude_mask(np.ones((2, 2)), np.ones((3, 2)))

    def test_training_target_is_twice_voice(self, rng):
        voice = np.abs(rng.standard_normal((5, 4))) + 0.1
        acc = np.abs(rng.standard_normal((5, 4)))
        target = make_training_target(voice, [voice, acc]).data
        np.testing.assert_allclose(target, 2 * voice, rtol=1e-12)

    def test_training_target_silent(self):
        z = np.zeros((3, 3))
        assert np.all(make_training_target(z, [z, z]).data == 0)


class TestSubsequences:
    def test_window_count_and_start(self):
        cfg = SequenceConfig(T=12, L=2)
        mag = np.arange(50.0)[:, None] * np.ones((1, 3))
        batch = make_subsequences(mag, cfg)
        assert len(batch) == int(np.ceil(50 / 8))
        # window b begins at frame b*T' - L, so its central block starts at b*T'
        for b in range(len(batch)):
            np.testing.assert_array_equal(batch.central()[b, 0], mag[min(b * 8, 49)] * (b * 8 < 50))
        # leading context of the first window is zero padding
        assert np.all(batch.windows[0, :2] == 0)

    @settings(max_examples=40, deadline=None)
    @given(frames=st.integers(1, 200), T=st.integers(3, 40), L=st.integers(0, 8))
    def test_central_blocks_reassemble(self, frames, T, L):
        if T <= 2 * L:
            return
        cfg = SequenceConfig(T=T, L=L)
        mag = np.random.default_rng(frames).random((frames, 4))
        batch = make_subsequences(mag, cfg)
        assert batch.windows.shape == (cfg.n_windows(frames), T, 4)
        np.testing.assert_array_equal(overlap_reconstruct(batch.central(), frames).data, mag)

    def test_context_frames_are_neighbours(self):
        cfg = SequenceConfig(T=10, L=3)
        mag = np.arange(1.0, 41.0)[:, None]
        w = make_subsequences(mag, cfg).windows
        # second window: frames 1..10 (0-based), i.e. 4 - 3 .. 4 + 4 + 3 - 1
        np.testing.assert_array_equal(w[1, :, 0], mag[1:11, 0])

    @pytest.mark.parametrize("T, L", [(4, 2), (5, -1), (0, 0)])
    def test_bad_config(self, T, L):
        with pytest.raises(InvalidArgumentError):
            SequenceConfig(T=T, L=L)

    def test_reconstruct_too_many_frames(self):
        with pytest.raises(InvalidArgumentError):
            overlap_reconstruct(np.zeros((2, 3, 4)), 7)


class TestFixtureAndLayout:
    def test_fixture_is_deterministic_and_additive(self):
        a, b = synth_fixture(3, 0.5), synth_fixture(3, 0.5)
        np.testing.assert_array_equal(a.mixture, b.mixture)
        np.testing.assert_allclose(a.voice + a.accompaniment, a.mixture, atol=1e-15)
        assert np.max(np.abs(a.mixture)) == pytest.approx(0.8)
        assert not np.array_equal(a.mixture, synth_fixture(4, 0.5).mixture)

    def test_unequal_stems_rejected(self):
        with pytest.raises(InvalidArgumentError):
            TrackPair(np.zeros(3), np.zeros(3), np.zeros(4))

    def test_write_and_load(self, tmp_path):
        track = synth_fixture(0, 0.2)
        write_track(tmp_path, "t0", track)
        write_track(tmp_path, "t1", track)
        assert list_tracks(tmp_path) == ["t0", "t1"]
        loaded = load_dataset(tmp_path)
        np.testing.assert_allclose(loaded[1].voice, track.voice, atol=1e-7)

    def test_missing_stem(self, tmp_path):
        write_track(tmp_path, "t0", synth_fixture(0, 0.1))
        (tmp_path / "t0" / "vocals.wav").unlink()
        with pytest.raises(DatasetLayoutError, match="vocals"):
            list_tracks(tmp_path)

    def test_empty_or_missing_root(self, tmp_path):
        with pytest.raises(DatasetLayoutError):
            list_tracks(tmp_path)
        with pytest.raises(DatasetLayoutError):
            list_tracks(tmp_path / "nope")
