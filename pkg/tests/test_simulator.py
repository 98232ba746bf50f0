"""Image-source room rendering, stimulus synthesis, and SNR calibration."""
from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.signal import fftconvolve, resample

from wavedoa import (
    ArrayGeometry,
    ConfigurationError,
    GeometryError,
    InvalidStimulusError,
    MultichannelAudio,
    RoomScenario,
    circular_array,
    ground_truth,
    image_source_rir,
    rotated_mic_positions,
    simulate_capture,
    synth_speech_like,
    write_wav,
)

FS = 16000.0
C = 343.0

# 32 samples of travel at 16 kHz: places the direct spike on a bin center.
INTEGER_DELAY_DIST = C * 32 / FS


def anechoic(source, center, **kw) -> RoomScenario:
    return RoomScenario(room_dim=(6.0, 7.0, 3.0), source_pos=source, array_center=center,
                        absorption=1.0, max_image_order=0, **kw)


class TestScenarioValidation:
    def test_source_outside_rejected(self):
        with pytest.raises(GeometryError):
            RoomScenario(room_dim=(4.0, 5.0, 3.0), source_pos=(4.0, 1.0, 1.0),
                         array_center=(2.0, 2.0, 1.0))

    def test_array_outside_rejected(self):
        with pytest.raises(GeometryError):
            RoomScenario(room_dim=(4.0, 5.0, 3.0), source_pos=(1.0, 1.0, 1.0),
                         array_center=(2.0, -0.1, 1.0))

    def test_parameter_ranges(self):
        ok = dict(room_dim=(4.0, 5.0, 3.0), source_pos=(1.0, 1.0, 1.0),
                  array_center=(2.0, 2.0, 1.0))
        with pytest.raises(ConfigurationError):
            RoomScenario(absorption=0.0, **ok)
        with pytest.raises(ConfigurationError):
            RoomScenario(absorption=1.2, **ok)
        with pytest.raises(ConfigurationError):
            RoomScenario(max_image_order=-1, **ok)
        with pytest.raises(ConfigurationError):
            RoomScenario(noise_kind="pink", **ok)
        with pytest.raises(ConfigurationError):
            RoomScenario(noise_kind="file", **ok)

    def test_rotated_mic_outside_rejected(self):
        scn = RoomScenario(room_dim=(4.0, 5.0, 3.0), source_pos=(1.0, 1.0, 1.0),
                           array_center=(3.97, 2.0, 1.0))
        with pytest.raises(GeometryError):
            rotated_mic_positions(circular_array(), scn)


class TestGroundTruth:
    def test_unrotated_axis_directions(self):
        scn = RoomScenario(room_dim=(6.0, 7.0, 3.0), source_pos=(4.0, 3.5, 1.5),
                           array_center=(3.0, 3.5, 1.5))
        truth = ground_truth(scn)
        assert truth.azimuth == pytest.approx(0.0)
        assert truth.elevation == pytest.approx(np.pi / 2)
        assert truth.distance == pytest.approx(1.0)

    def test_rotation_subtracts_from_azimuth(self):
        # Array rotated +90 deg sees a +x source at -90 deg, i.e. 270.
        scn = RoomScenario(room_dim=(6.0, 7.0, 3.0), source_pos=(4.0, 3.5, 1.5),
                           array_center=(3.0, 3.5, 1.5), array_rotation_deg=90.0)
        assert ground_truth(scn).azimuth == pytest.approx(np.deg2rad(270.0))

    def test_elevation_of_raised_source(self):
        scn = RoomScenario(room_dim=(6.0, 7.0, 3.0), source_pos=(3.0, 3.5, 2.5),
                           array_center=(3.0, 3.5, 1.5))
        assert ground_truth(scn).elevation == pytest.approx(0.0)


class TestImageSourceRir:
    def test_direct_path_spike(self):
        # Integer-sample distance: the windowed sinc collapses to a delta at
        # delay d/c plus the constant kernel pre-delay, amplitude 1/d.
        scn = anechoic((3.0 + INTEGER_DELAY_DIST, 3.5, 1.5), (3.0, 3.5, 1.5))
        rir = image_source_rir(scn, np.array([3.0, 3.5, 1.5]))
        peak = int(np.argmax(np.abs(rir)))
        assert peak == 32 + 40
        assert rir[peak] == pytest.approx(1.0 / INTEGER_DELAY_DIST, rel=1e-9)
        rest = np.delete(rir, peak)
        assert np.max(np.abs(rest)) < 1e-12 / INTEGER_DELAY_DIST + 1e-9

    def test_full_absorption_equals_order_zero(self):
        src, mic = (2.2, 3.1, 1.4), np.array([3.3, 4.0, 1.7])
        lossless_walls = RoomScenario(room_dim=(6.0, 7.0, 3.0), source_pos=src,
                                      array_center=(3.0, 3.5, 1.5), absorption=1.0,
                                      max_image_order=6)
        direct_only = RoomScenario(room_dim=(6.0, 7.0, 3.0), source_pos=src,
                                   array_center=(3.0, 3.5, 1.5), absorption=1.0,
                                   max_image_order=0)
        long_rir = image_source_rir(lossless_walls, mic)
        short_rir = image_source_rir(direct_only, mic)
        np.testing.assert_array_equal(long_rir[: short_rir.shape[0]], short_rir)
        assert np.all(long_rir[short_rir.shape[0]:] == 0.0)

    def test_first_order_mirror_delay_and_amplitude(self):
        # Source and mic near the x=0 wall of a big room: the x-mirror image
        # lands well clear of every other image, so the upsampled RIR peaks at
        # the mirror distance with amplitude beta / distance.
        absorption = 0.19  # beta = 0.9
        scn = RoomScenario(room_dim=(8.0, 9.0, 3.0), source_pos=(0.5, 4.5, 1.5),
                           array_center=(1.5, 4.5, 1.2), absorption=absorption,
                           max_image_order=1)
        mic = np.array([1.5, 4.5, 1.2])
        rir = image_source_rir(scn, mic)
        image = np.array([-0.5, 4.5, 1.5])
        d_mirror = float(np.linalg.norm(mic - image))
        up = 8
        fine = resample(rir, rir.shape[0] * up)
        t_mirror = (d_mirror / C * FS + 40) * up
        window = fine[int(t_mirror) - up : int(t_mirror) + up + 1]
        beta = math.sqrt(1.0 - absorption)
        # The windowed-sinc fractional-delay kernel has a few percent of
        # passband droop, so the reconstructed spike sits slightly low.
        assert np.max(np.abs(window)) == pytest.approx(beta / d_mirror, rel=0.05)

    def test_intermic_delay_matches_geometry(self):
        # Anechoic capture: cross-correlation at 8x oversampling must place
        # the inter-mic lag within one fine lag of the exact path difference.
        src = (5.0, 3.5, 1.5)
        scn = anechoic(src, (2.0, 3.5, 1.5))
        mic_a = np.array([1.8, 3.2, 1.5])
        mic_b = np.array([2.2, 3.9, 1.5])
        rir_a = image_source_rir(scn, mic_a)
        rir_b = image_source_rir(scn, mic_b)
        n = max(rir_a.shape[0], rir_b.shape[0])
        up = 8
        a = resample(np.pad(rir_a, (0, n - rir_a.shape[0])), n * up)
        b = resample(np.pad(rir_b, (0, n - rir_b.shape[0])), n * up)
        xc = fftconvolve(a, b[::-1])
        # Peak at lag d means a matches b shifted by d, i.e. lag = t_a - t_b.
        lag = (int(np.argmax(xc)) - (n * up - 1)) / up / FS
        expected = (np.linalg.norm(np.asarray(src) - mic_a)
                    - np.linalg.norm(np.asarray(src) - mic_b)) / C
        assert lag == pytest.approx(expected, abs=1.0 / (up * FS))

    def test_energy_non_increasing_in_absorption(self):
        mic = np.array([3.3, 4.0, 1.7])
        energies = []
        for absorption in (0.2, 0.5, 0.9):
            scn = RoomScenario(room_dim=(6.0, 7.0, 3.0), source_pos=(2.2, 3.1, 1.4),
                               array_center=(3.0, 3.5, 1.5), absorption=absorption,
                               max_image_order=6)
            energies.append(float(np.sum(image_source_rir(scn, mic) ** 2)))
        assert energies[0] > energies[1] > energies[2]

    def test_doubling_distance_halves_amplitude(self):
        scn1 = anechoic((3.0 + INTEGER_DELAY_DIST, 3.5, 1.5), (3.0, 3.5, 1.5))
        scn2 = anechoic((3.0 + 2 * INTEGER_DELAY_DIST, 3.5, 1.5), (3.0, 3.5, 1.5))
        mic = np.array([3.0, 3.5, 1.5])
        peak1 = np.max(np.abs(image_source_rir(scn1, mic)))
        peak2 = np.max(np.abs(image_source_rir(scn2, mic)))
        assert peak1 == pytest.approx(2.0 * peak2, rel=1e-9)


class TestSynthSpeechLike:
    def test_shape_and_normalization(self):
        sig = synth_speech_like(1.0, FS, np.random.default_rng(1))
        assert sig.shape == (16000,)
        assert np.max(np.abs(sig)) == pytest.approx(0.5)
        assert np.all(sig[: int(0.25 * FS)] == 0.0)

    def test_deterministic_under_seed(self):
        a = synth_speech_like(0.5, FS, np.random.default_rng(7))
        b = synth_speech_like(0.5, FS, np.random.default_rng(7))
        np.testing.assert_array_equal(a, b)

    def test_too_short_rejected(self):
        with pytest.raises(InvalidStimulusError):
            synth_speech_like(0.2, FS, np.random.default_rng(0), lead_silence_s=0.25)


class TestSimulateCapture:
    def _clean_render(self, speech, scn, geometry):
        mics = rotated_mic_positions(geometry, scn)
        rirs = [image_source_rir(scn, mic) for mic in mics]
        n_out = speech.shape[0] + max(r.shape[0] for r in rirs) - 1
        clean = np.zeros((n_out, len(rirs)))
        for m, rir in enumerate(rirs):
            conv = fftconvolve(speech, rir)
            clean[: conv.shape[0], m] = conv
        return clean

    def test_snr_calibration_exact(self):
        rng = np.random.default_rng(11)
        speech = synth_speech_like(0.5, FS, rng)
        scn = RoomScenario(room_dim=(6.0, 7.0, 3.0), source_pos=(4.0, 3.5, 1.5),
                           array_center=(3.0, 3.5, 1.5), absorption=0.5,
                           max_image_order=4, snr_db=0.0)
        geometry = circular_array()
        audio, _ = simulate_capture(speech, scn, geometry, np.random.default_rng(12))
        clean = self._clean_render(speech, scn, geometry)
        noise = audio.samples - clean
        snr = 10 * np.log10(np.mean(clean**2) / np.mean(noise**2))
        assert snr == pytest.approx(0.0, abs=1e-6)

    def test_snr_calibration_with_noise_file(self, babble_wav):
        rng = np.random.default_rng(13)
        speech = synth_speech_like(0.5, FS, rng)
        scn = RoomScenario(room_dim=(6.0, 7.0, 3.0), source_pos=(4.0, 3.5, 1.5),
                           array_center=(3.0, 3.5, 1.5), absorption=1.0,
                           max_image_order=0, snr_db=12.0,
                           noise_kind="file", noise_path=babble_wav)
        geometry = circular_array()
        audio, _ = simulate_capture(speech, scn, geometry, np.random.default_rng(14))
        clean = self._clean_render(speech, scn, geometry)
        noise = audio.samples - clean
        snr = 10 * np.log10(np.mean(clean**2) / np.mean(noise**2))
        assert snr == pytest.approx(12.0, abs=1e-5)

    def test_deterministic_under_seed(self):
        speech = synth_speech_like(0.3, FS, np.random.default_rng(15))
        scn = RoomScenario(room_dim=(6.0, 7.0, 3.0), source_pos=(4.0, 3.5, 1.5),
                           array_center=(3.0, 3.5, 1.5))
        a, _ = simulate_capture(speech, scn, circular_array(), np.random.default_rng(16))
        b, _ = simulate_capture(speech, scn, circular_array(), np.random.default_rng(16))
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_truth_returned_with_capture(self):
        speech = synth_speech_like(0.3, FS, np.random.default_rng(17))
        scn = RoomScenario(room_dim=(6.0, 7.0, 3.0), source_pos=(3.0, 4.5, 1.5),
                           array_center=(3.0, 3.5, 1.5))
        audio, truth = simulate_capture(speech, scn, circular_array(),
                                        np.random.default_rng(18))
        assert truth.azimuth == pytest.approx(np.pi / 2)
        assert audio.channel_count == 8
        assert audio.sample_rate == FS

    def test_silent_speech_rejected(self):
        scn = RoomScenario(room_dim=(6.0, 7.0, 3.0), source_pos=(4.0, 3.5, 1.5),
                           array_center=(3.0, 3.5, 1.5))
        with pytest.raises(InvalidStimulusError):
            simulate_capture(np.zeros(1000), scn, circular_array(),
                             np.random.default_rng(0))
        with pytest.raises(InvalidStimulusError):
            simulate_capture(np.ones((10, 2)), scn, circular_array(),
                             np.random.default_rng(0))

    def test_silent_noise_file_rejected(self, tmp_path):
        path = tmp_path / "silent.wav"
        write_wav(str(path), MultichannelAudio(samples=np.zeros(4000), sample_rate=FS))
        scn = RoomScenario(room_dim=(6.0, 7.0, 3.0), source_pos=(4.0, 3.5, 1.5),
                           array_center=(3.0, 3.5, 1.5), noise_kind="file",
                           noise_path=str(path))
        speech = synth_speech_like(0.3, FS, np.random.default_rng(19))
        with pytest.raises(InvalidStimulusError):
            simulate_capture(speech, scn, circular_array(), np.random.default_rng(20))
