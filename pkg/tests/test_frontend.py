"""Frame extraction, SNR tracking, and sigmoid weighting."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavedoa import (
    EmptyInputError,
    MalformedInputError,
    MultichannelAudio,
    SigmoidWeightConfig,
    band_indices,
    frame_energy,
    read_wav,
    snr_weight,
    stft_frames,
    track_noise_floor,
    write_wav,
)

FS = 16000.0


class TestMultichannelAudio:
    def test_single_channel_column_promoted(self):
        audio = MultichannelAudio(samples=np.zeros(100), sample_rate=FS)
        assert audio.samples.shape == (100, 1)
        assert audio.channel_count == 1

    def test_duration(self):
        audio = MultichannelAudio(samples=np.zeros((8000, 2)), sample_rate=FS)
        assert audio.duration_s == pytest.approx(0.5)

    def test_ragged_channels_rejected(self):
        with pytest.raises(MalformedInputError):
            MultichannelAudio.from_channels([np.zeros(10), np.zeros(11)], FS)

    def test_bad_rank_rejected(self):
        with pytest.raises(MalformedInputError):
            MultichannelAudio(samples=np.zeros((4, 4, 4)), sample_rate=FS)

    def test_nonpositive_rate_rejected(self):
        with pytest.raises(MalformedInputError):
            MultichannelAudio(samples=np.zeros(10), sample_rate=0.0)


class TestStft:
    def test_impulse_has_flat_unit_magnitude(self):
        # Unnormalized DFT of a frame-leading impulse is 1 at every bin.
        samples = np.zeros(8)
        samples[0] = 1.0
        audio = MultichannelAudio(samples=samples, sample_rate=FS)
        frames = stft_frames(audio, frame_len=8, hop=8, window="boxcar")
        assert len(frames) == 1
        np.testing.assert_allclose(np.abs(frames[0].spectra[:, 0]), 1.0, atol=1e-12)

    def test_frame_count_and_indices(self):
        audio = MultichannelAudio(samples=np.zeros((2048, 3)), sample_rate=FS)
        frames = stft_frames(audio, frame_len=512, hop=256)
        assert len(frames) == (2048 - 512) // 256 + 1
        assert [f.frame_index for f in frames] == list(range(len(frames)))
        assert all(f.num_channels == 3 for f in frames)
        assert all(f.num_bins == 257 for f in frames)

    def test_bin_frequencies_in_rad_per_s(self):
        audio = MultichannelAudio(samples=np.zeros(512), sample_rate=FS)
        (frame,) = stft_frames(audio, frame_len=512, hop=512)
        expected = 2 * np.pi * np.fft.rfftfreq(512, 1 / FS)
        np.testing.assert_allclose(frame.bin_frequencies, expected)

    def test_window_applied(self):
        rng = np.random.default_rng(3)
        samples = rng.standard_normal(512)
        audio = MultichannelAudio(samples=samples, sample_rate=FS)
        (frame,) = stft_frames(audio, frame_len=512, hop=512, window="hann")
        from scipy.signal import get_window

        expected = np.fft.rfft(samples * get_window("hann", 512, fftbins=True))
        np.testing.assert_allclose(frame.spectra[:, 0], expected)

    def test_short_audio_rejected(self):
        audio = MultichannelAudio(samples=np.zeros(100), sample_rate=FS)
        with pytest.raises(EmptyInputError):
            stft_frames(audio, frame_len=512, hop=256)

    def test_nonpow2_frame_rejected(self):
        audio = MultichannelAudio(samples=np.zeros(1000), sample_rate=FS)
        with pytest.raises(MalformedInputError):
            stft_frames(audio, frame_len=500, hop=250)

    def test_bad_hop_rejected(self):
        audio = MultichannelAudio(samples=np.zeros(1024), sample_rate=FS)
        with pytest.raises(MalformedInputError):
            stft_frames(audio, frame_len=512, hop=1024)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1))
    def test_parseval_energy_identity(self, seed):
        # One-sided accounting (interior bins doubled) recovers the windowed
        # segment energy exactly, up to float rounding.
        rng = np.random.default_rng(seed)
        samples = rng.standard_normal((512, 2))
        audio = MultichannelAudio(samples=samples, sample_rate=FS)
        (frame,) = stft_frames(audio, frame_len=512, hop=512, window="hann")
        from scipy.signal import get_window

        windowed = samples * get_window("hann", 512, fftbins=True)[:, None]
        assert frame_energy(frame) == pytest.approx(float(np.sum(windowed**2)), rel=1e-9)


class TestNoiseFloor:
    def test_white_noise_snr_near_zero(self):
        # Stationary noise is its own floor: SNR should hover around 0 dB.
        rng = np.random.default_rng(11)
        audio = MultichannelAudio(samples=rng.standard_normal(300 * 256 + 512), sample_rate=FS)
        frames = track_noise_floor(stft_frames(audio))
        assert len(frames) >= 100
        tail = [f.frame_snr_db for f in frames[100:]]
        assert float(np.mean(tail)) == pytest.approx(0.0, abs=2.0)

    def test_tone_onset_raises_snr(self):
        # Onset lands at frame ~100; sample the window where the trailing-min
        # floor still remembers the quiet half. A tone sustained longer than
        # the tracker window is absorbed into the floor by design.
        rng = np.random.default_rng(12)
        n = 200 * 256 + 512
        t = np.arange(n) / FS
        samples = 0.01 * rng.standard_normal(n)
        samples[n // 2 :] += np.sin(2 * np.pi * 1000.0 * t[n // 2 :])
        audio = MultichannelAudio(samples=samples, sample_rate=FS)
        frames = track_noise_floor(stft_frames(audio))
        quiet = float(np.mean([f.frame_snr_db for f in frames[60:90]]))
        loud = float(np.mean([f.frame_snr_db for f in frames[110:135]]))
        assert loud > quiet + 20.0
        absorbed = float(np.mean([f.frame_snr_db for f in frames[-20:]]))
        assert absorbed < loud - 20.0

    def test_silence_reports_zero(self):
        audio = MultichannelAudio(samples=np.zeros(50 * 256 + 512), sample_rate=FS)
        frames = track_noise_floor(stft_frames(audio))
        assert all(f.frame_snr_db == 0.0 for f in frames)
        assert all(np.all(f.snr_db == 0.0) for f in frames)

    def test_snr_never_negative(self):
        rng = np.random.default_rng(13)
        audio = MultichannelAudio(samples=rng.standard_normal(80 * 256 + 512), sample_rate=FS)
        frames = track_noise_floor(stft_frames(audio))
        assert all(f.frame_snr_db >= 0.0 for f in frames)
        assert all(np.all(f.snr_db >= 0.0) for f in frames)

    def test_inputs_untouched(self):
        rng = np.random.default_rng(14)
        audio = MultichannelAudio(samples=rng.standard_normal(20 * 256 + 512), sample_rate=FS)
        frames = stft_frames(audio)
        track_noise_floor(frames)
        assert all(f.frame_snr_db == 0.0 for f in frames)


class TestSnrWeight:
    def test_pinned_value(self):
        cfg = SigmoidWeightConfig(midpoint_db=10.0, slope=0.5)
        assert snr_weight(14.0, cfg) == pytest.approx(0.8808, abs=1e-4)

    def test_midpoint_is_half(self):
        cfg = SigmoidWeightConfig(midpoint_db=6.0, slope=0.5)
        assert snr_weight(6.0, cfg) == pytest.approx(0.5)

    def test_limits(self):
        cfg = SigmoidWeightConfig()
        assert snr_weight(-1000.0, cfg) == pytest.approx(0.0, abs=1e-12)
        assert snr_weight(1000.0, cfg) == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(
        lo=st.floats(-40, 40),
        gap=st.floats(0.1, 40),
        mid=st.floats(-10, 20),
        slope=st.floats(0.05, 3),
    )
    def test_monotone_increasing(self, lo, gap, mid, slope):
        # Strict growth holds until the sigmoid saturates at the float limits.
        cfg = SigmoidWeightConfig(midpoint_db=mid, slope=slope)
        w_lo = snr_weight(lo, cfg)
        w_hi = snr_weight(lo + gap, cfg)
        assert w_hi >= w_lo
        if slope * (lo - mid) > -30.0 and slope * (lo + gap - mid) < 30.0:
            assert w_hi > w_lo

    def test_vector_input(self):
        cfg = SigmoidWeightConfig()
        w = snr_weight(np.array([0.0, 6.0, 12.0]), cfg)
        assert w.shape == (3,)
        assert w[1] == pytest.approx(0.5)


class TestWavRoundTrip:
    def test_float_round_trip(self, tmp_path):
        rng = np.random.default_rng(21)
        samples = np.clip(0.3 * rng.standard_normal((4000, 4)), -1, 1)
        path = tmp_path / "x.wav"
        write_wav(str(path), MultichannelAudio(samples=samples, sample_rate=FS))
        loaded = read_wav(str(path))
        assert loaded.sample_rate == FS
        assert loaded.channel_count == 4
        np.testing.assert_allclose(loaded.samples, samples, atol=1e-6)


class TestBandIndices:
    def test_band_membership(self):
        omega = 2 * np.pi * np.fft.rfftfreq(512, 1 / FS)
        idx = band_indices(omega, (300.0, 4000.0))
        hz = omega[idx] / (2 * np.pi)
        assert np.all((hz >= 300.0) & (hz <= 4000.0))
        outside = np.setdiff1d(np.arange(omega.shape[0]), idx)
        hz_out = omega[outside] / (2 * np.pi)
        assert np.all((hz_out < 300.0) | (hz_out > 4000.0))
        assert idx.shape[0] == 119
