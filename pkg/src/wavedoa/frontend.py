"""Time-domain capture to per-frame multichannel spectra with SNR estimates.

Everything downstream of this module works on `SpectralFrame` objects: the
windowed DFT of each channel, per-bin SNR from a running-minimum noise floor,
and the SNR sigmoid weights used by the likelihood stages.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile
from scipy.signal import get_window
from scipy.special import expit

from .errors import EmptyInputError, MalformedInputError

# Absolute floor for noise power so silence never divides by zero.
NOISE_POWER_FLOOR = 1e-20

# Default analysis band, Hz. Speech band; tunables surface in the harness config.
DEFAULT_BAND_HZ = (300.0, 4000.0)


@dataclass(frozen=True)
class MultichannelAudio:
    """Raw capture: samples[sample, channel], dimensionless amplitudes in ±1."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.ndim != 2:
            raise MalformedInputError(
                f"samples must be [n_samples, n_channels], got ndim={samples.ndim}"
            )
        if self.sample_rate <= 0:
            raise MalformedInputError(f"sample_rate must be > 0, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    @property
    def channel_count(self) -> int:
        return self.samples.shape[1]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return self.num_samples / self.sample_rate

    @classmethod
    def from_channels(cls, channels, sample_rate: float) -> "MultichannelAudio":
        """Build from per-channel sequences; rejects ragged lengths."""
        arrays = [np.asarray(ch, dtype=np.float64) for ch in channels]
        lengths = {a.shape[0] for a in arrays}
        if len(lengths) > 1:
            raise MalformedInputError(f"channel length mismatch: {sorted(lengths)}")
        return cls(samples=np.stack(arrays, axis=1), sample_rate=sample_rate)


@dataclass(frozen=True)
class SpectralFrame:
    """One STFT frame: spectra[bin, channel], bin_frequencies in rad/s.

    snr_db and frame_snr_db are zero until `track_noise_floor` fills them in.
    """

    frame_index: int
    spectra: np.ndarray
    bin_frequencies: np.ndarray
    snr_db: np.ndarray
    frame_snr_db: float

    def __post_init__(self):
        if self.spectra.shape[0] != self.bin_frequencies.shape[0]:
            raise MalformedInputError("spectra rows must match bin count")
        if np.any(np.diff(self.bin_frequencies) <= 0):
            raise MalformedInputError("bin_frequencies must be strictly increasing")
        if not np.all(np.isfinite(self.snr_db)):
            raise MalformedInputError("snr_db must be finite")

    @property
    def num_bins(self) -> int:
        return self.spectra.shape[0]

    @property
    def num_channels(self) -> int:
        return self.spectra.shape[1]


@dataclass(frozen=True)
class SigmoidWeightConfig:
    """Parameters of the SNR sigmoid used for per-bin and per-frame weighting."""

    midpoint_db: float = 6.0
    slope: float = 0.5

    def __post_init__(self):
        if self.slope <= 0:
            raise MalformedInputError(f"sigmoid slope must be > 0, got {self.slope}")


def snr_weight(snr_db, cfg: SigmoidWeightConfig):
    """Sigmoid weight in [0, 1], monotone in SNR: 1/(1+exp(-slope*(snr-mid)))."""
    snr_db = np.asarray(snr_db, dtype=np.float64)
    w = expit(cfg.slope * (snr_db - cfg.midpoint_db))
    return float(w) if w.ndim == 0 else w


def read_wav(path) -> MultichannelAudio:
    """Read an interleaved multichannel WAV (PCM 16/24-bit or IEEE float)."""
    sample_rate, data = wavfile.read(path)
    if data.ndim == 1:
        data = data[:, None]
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        # scipy left-justifies 24-bit PCM into int32, so one scale covers both
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise MalformedInputError(f"unsupported WAV sample format: {data.dtype}")
    return MultichannelAudio(samples=samples, sample_rate=float(sample_rate))


def write_wav(path, audio: MultichannelAudio) -> None:
    """Write float32 WAV; the companion of `read_wav` for simulator output."""
    wavfile.write(path, int(round(audio.sample_rate)), audio.samples.astype(np.float32))


def stft_frames(
    audio: MultichannelAudio,
    frame_len: int = 512,
    hop: int = 256,
    window: str = "hann",
) -> list[SpectralFrame]:
    """Slice audio into windowed DFT frames, bins restricted to [0, Nyquist].

    Spectra are the plain (unnormalized) one-sided DFT of each windowed
    segment. Frame count is floor((len - frame_len)/hop) + 1.
    """
    if frame_len <= 0 or (frame_len & (frame_len - 1)) != 0:
        raise MalformedInputError(f"frame_len must be a power of two, got {frame_len}")
    if not 0 < hop <= frame_len:
        raise MalformedInputError(f"hop must be in (0, frame_len], got {hop}")
    if audio.num_samples < frame_len:
        raise EmptyInputError(
            f"audio has {audio.num_samples} samples, need at least {frame_len}"
        )

    taper = get_window(window, frame_len, fftbins=True)
    n_frames = (audio.num_samples - frame_len) // hop + 1
    omega = 2.0 * np.pi * np.fft.rfftfreq(frame_len, d=1.0 / audio.sample_rate)
    zero_snr = np.zeros(omega.shape[0])

    frames = []
    for t in range(n_frames):
        segment = audio.samples[t * hop : t * hop + frame_len, :]
        spectra = np.fft.rfft(segment * taper[:, None], axis=0)
        frames.append(
            SpectralFrame(
                frame_index=t,
                spectra=spectra,
                bin_frequencies=omega,
                snr_db=zero_snr,
                frame_snr_db=0.0,
            )
        )
    return frames


def frame_energy(frame: SpectralFrame) -> float:
    """Windowed-segment energy recovered from the one-sided spectrum.

    Interior bins count twice (conjugate-symmetric halves), DC and Nyquist
    once; dividing by the DFT length gives exact Parseval equality with the
    time-domain segment energy.
    """
    power = np.abs(frame.spectra) ** 2
    n_fft = 2 * (frame.num_bins - 1)
    doubled = 2.0 * power.sum() - power[0, :].sum() - power[-1, :].sum()
    return float(doubled / n_fft)


def _frame_band_power(frame: SpectralFrame) -> np.ndarray:
    """Per-bin power averaged over channels."""
    return np.mean(np.abs(frame.spectra) ** 2, axis=1)


def track_noise_floor(
    frames: list[SpectralFrame],
    window_frames: int = 50,
    smoothing: float = 0.1,
) -> list[SpectralFrame]:
    """Fill per-bin and per-frame SNR via a trailing running-minimum floor.

    The per-bin power is smoothed with a first-order recursion (reduces the
    chi-squared spread so the minimum is not badly biased), the noise floor is
    the minimum of the smoothed power over the trailing `window_frames`, and
    SNR ratios are clamped at 1.0 so silence reports 0 dB rather than -inf.
    Sequential by construction; returns new frames, inputs untouched.
    """
    if window_frames < 1:
        raise MalformedInputError(f"window_frames must be >= 1, got {window_frames}")
    if not frames:
        return []

    out = []
    smoothed_history = []
    smoothed = None
    for frame in frames:
        power = _frame_band_power(frame)
        smoothed = power if smoothed is None else (1 - smoothing) * smoothed + smoothing * power
        smoothed_history.append(smoothed)
        window = smoothed_history[-window_frames:]
        floor = np.maximum(np.minimum.reduce(window), NOISE_POWER_FLOOR)

        snr_db = 10.0 * np.log10(np.maximum(power / floor, 1.0))
        frame_ratio = max(power.sum() / floor.sum(), 1.0)
        frame_snr_db = 10.0 * np.log10(frame_ratio)
        out.append(dataclasses.replace(frame, snr_db=snr_db, frame_snr_db=frame_snr_db))
    return out


def band_indices(bin_frequencies_rad: np.ndarray, band_hz=DEFAULT_BAND_HZ) -> np.ndarray:
    """Indices of bins whose frequency (Hz) falls inside the closed band."""
    freq_hz = np.asarray(bin_frequencies_rad) / (2.0 * np.pi)
    idx = np.nonzero((freq_hz >= band_hz[0]) & (freq_hz <= band_hz[1]))[0]
    return idx
