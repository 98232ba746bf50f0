"""Shoebox room simulator: image-source echoes, mic capture, noise mixing.

The mirror construction tiles space with reflected copies of the room; every
copy holds an image of the source, and each image contributes one attenuated,
fractionally delayed spike to the impulse response. Per axis, the image
coordinate is (1 - 2p) * s + 2 r L with p in {0, 1} and integer r, and the
ray to it crosses the lower wall |r - p| times and the upper wall |r| times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve, sosfiltfilt, butter

from .dictionary import ArrayGeometry
from .errors import ConfigurationError, GeometryError, InvalidStimulusError
from .frontend import MultichannelAudio

SPEED_OF_SOUND = 343.0

# Every path is shifted right by this many samples so the windowed-sinc
# interpolation kernel never spills past t = 0. Identical across channels,
# so inter-mic timing is untouched.
_KERNEL_HALF = 40
_KERNEL_LEN = 2 * _KERNEL_HALF + 1


@dataclass(frozen=True)
class RoomScenario:
    """One capture setup: box room, source point, array pose, noise level."""

    room_dim: tuple[float, float, float]
    source_pos: tuple[float, float, float]
    array_center: tuple[float, float, float]
    array_rotation_deg: float = 0.0
    absorption: float = 0.3
    max_image_order: int = 6
    snr_db: float = 20.0
    sample_rate: float = 16000.0
    noise_kind: str = "white"
    noise_path: str | None = None

    def __post_init__(self):
        dims = np.asarray(self.room_dim, dtype=np.float64)
        src = np.asarray(self.source_pos, dtype=np.float64)
        center = np.asarray(self.array_center, dtype=np.float64)
        if dims.shape != (3,) or np.any(dims <= 0):
            raise ConfigurationError(f"room_dim must be 3 positive lengths, got {self.room_dim}")
        for label, point in (("source", src), ("array center", center)):
            if point.shape != (3,):
                raise ConfigurationError(f"{label} must be a 3-vector")
            if np.any(point <= 0) or np.any(point >= dims):
                raise GeometryError(f"{label} {tuple(point)} is not strictly inside the room")
        if not 0.0 < self.absorption <= 1.0:
            raise ConfigurationError("absorption must lie in (0, 1]")
        if not 0 <= self.max_image_order <= 20:
            raise ConfigurationError("max_image_order must lie in [0, 20]")
        if self.sample_rate <= 0:
            raise ConfigurationError("sample_rate must be positive")
        if self.noise_kind not in ("white", "file"):
            raise ConfigurationError("noise_kind must be 'white' or 'file'")
        if self.noise_kind == "file" and not self.noise_path:
            raise ConfigurationError("noise_kind 'file' requires noise_path")


@dataclass(frozen=True)
class GroundTruth:
    """Source direction in the array's own frame."""

    azimuth: float
    elevation: float
    distance: float


def rotated_mic_positions(geometry: ArrayGeometry, scenario: RoomScenario) -> np.ndarray:
    """World-frame mic positions: rotate about z, then translate to center."""
    ang = math.radians(scenario.array_rotation_deg)
    rot = np.array(
        [[math.cos(ang), -math.sin(ang), 0.0], [math.sin(ang), math.cos(ang), 0.0], [0.0, 0.0, 1.0]]
    )
    world = geometry.mic_positions @ rot.T + np.asarray(scenario.array_center)
    dims = np.asarray(scenario.room_dim)
    if np.any(world <= 0) or np.any(world >= dims):
        raise GeometryError("a microphone falls outside the room")
    return world


def ground_truth(scenario: RoomScenario) -> GroundTruth:
    """Azimuth/elevation of the source as seen by the rotated array."""
    v = np.asarray(scenario.source_pos) - np.asarray(scenario.array_center)
    dist = float(np.linalg.norm(v))
    azimuth = math.atan2(v[1], v[0]) - math.radians(scenario.array_rotation_deg)
    azimuth %= 2.0 * math.pi
    elevation = math.acos(float(np.clip(v[2] / dist, -1.0, 1.0)))
    return GroundTruth(azimuth=azimuth, elevation=elevation, distance=dist)


def _image_table(scenario: RoomScenario) -> tuple[np.ndarray, np.ndarray]:
    """All image-source positions and gains within the reflection budget."""
    dims = np.asarray(scenario.room_dim)
    src = np.asarray(scenario.source_pos)
    order = scenario.max_image_order
    beta = math.sqrt(1.0 - scenario.absorption)
    span = order // 2 + 1

    positions = []
    gains = []
    rng_r = range(-span, span + 1)
    for px in (0, 1):
        for py in (0, 1):
            for pz in (0, 1):
                p = np.array([px, py, pz])
                for rx in rng_r:
                    for ry in rng_r:
                        for rz in rng_r:
                            r = np.array([rx, ry, rz])
                            bounces = int(np.sum(np.abs(r - p)) + np.sum(np.abs(r)))
                            if bounces > order:
                                continue
                            positions.append((1 - 2 * p) * src + 2 * r * dims)
                            gains.append(beta**bounces)
    return np.asarray(positions), np.asarray(gains)


def image_source_rir(
    scenario: RoomScenario,
    receiver: np.ndarray,
    c: float = SPEED_OF_SOUND,
    images: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Impulse response from the source to one receiver point.

    Spikes have amplitude gain/distance and are placed with an 81-tap
    Hann-windowed sinc so sub-sample delays survive. `images` lets callers
    reuse one image table for several receivers.
    """
    positions, gains = images if images is not None else _image_table(scenario)
    fs = scenario.sample_rate
    dist = np.linalg.norm(positions - np.asarray(receiver), axis=1)
    if np.any(dist < 1e-6):
        raise GeometryError("receiver sits on top of the source")
    delays = dist / c * fs + _KERNEL_HALF
    length = int(np.floor(delays.max())) + _KERNEL_HALF + 2
    rir = np.zeros(length)
    k = np.arange(_KERNEL_LEN)
    window = np.hanning(_KERNEL_LEN)
    for t0, g, d in zip(delays, gains, dist):
        n0 = int(np.floor(t0))
        frac = t0 - n0
        taps = np.sinc(k - _KERNEL_HALF - frac) * window
        rir[n0 - _KERNEL_HALF : n0 - _KERNEL_HALF + _KERNEL_LEN] += (g / d) * taps
    return rir


def synth_speech_like(
    duration_s: float,
    sample_rate: float,
    rng: np.random.Generator,
    band_hz: tuple[float, float] = (150.0, 4200.0),
    lead_silence_s: float = 0.25,
) -> np.ndarray:
    """Band-limited noise with syllable-rate amplitude dips, leading silence.

    The dips matter: the noise-floor tracker needs low-energy stretches to
    latch onto. Peak-normalized to 0.5.
    """
    if duration_s <= lead_silence_s:
        raise InvalidStimulusError("duration must exceed the leading silence")
    n_active = int(round((duration_s - lead_silence_s) * sample_rate))
    noise = rng.standard_normal(n_active)
    nyq = sample_rate / 2.0
    sos = butter(4, [band_hz[0] / nyq, min(band_hz[1], nyq * 0.99) / nyq], btype="band", output="sos")
    shaped = sosfiltfilt(sos, noise)

    # Piecewise-smooth envelope at a syllabic 4 Hz, squared to deepen dips.
    n_knots = max(3, int(round(4.0 * (duration_s - lead_silence_s))) + 1)
    knots = rng.uniform(0.05, 1.0, size=n_knots)
    env = np.interp(np.linspace(0, n_knots - 1, n_active), np.arange(n_knots), knots) ** 2
    shaped *= env

    out = np.concatenate([np.zeros(int(round(lead_silence_s * sample_rate))), shaped])
    peak = np.abs(out).max()
    if peak == 0.0:
        raise InvalidStimulusError("stimulus is silent")
    return 0.5 * out / peak


def _noise_like(clean: np.ndarray, scenario: RoomScenario, rng: np.random.Generator) -> np.ndarray:
    """Unscaled noise matching the capture's shape, white or from a file."""
    if scenario.noise_kind == "white":
        return rng.standard_normal(clean.shape)
    from .frontend import read_wav  # local import avoids a cycle at module load

    recorded = read_wav(scenario.noise_path).samples[:, 0]
    if recorded.size == 0 or not np.any(recorded):
        raise InvalidStimulusError(f"noise file {scenario.noise_path} is silent")
    reps = int(np.ceil(clean.shape[0] / recorded.size))
    tiled = np.tile(recorded, reps + 1)
    noise = np.empty(clean.shape)
    for ch in range(clean.shape[1]):
        start = int(rng.integers(0, recorded.size))
        noise[:, ch] = tiled[start : start + clean.shape[0]]
    return noise


def simulate_capture(
    speech: np.ndarray,
    scenario: RoomScenario,
    geometry: ArrayGeometry,
    rng: np.random.Generator,
    c: float = SPEED_OF_SOUND,
) -> tuple[MultichannelAudio, GroundTruth]:
    """Convolve the speech into every mic and add noise at the scenario SNR.

    The SNR is calibrated utterance-wide and exactly: mean convolved-speech
    power across all samples and channels against mean added-noise power.
    """
    speech = np.asarray(speech, dtype=np.float64)
    if speech.ndim != 1 or speech.size == 0:
        raise InvalidStimulusError("speech must be a non-empty 1-D array")
    if not np.any(speech):
        raise InvalidStimulusError("speech is silent")

    mics = rotated_mic_positions(geometry, scenario)
    images = _image_table(scenario)
    rirs = [image_source_rir(scenario, mic, c=c, images=images) for mic in mics]
    rir_len = max(r.shape[0] for r in rirs)
    n_out = speech.shape[0] + rir_len - 1
    clean = np.zeros((n_out, len(rirs)))
    for m, rir in enumerate(rirs):
        conv = fftconvolve(speech, rir)
        clean[: conv.shape[0], m] = conv

    signal_power = float(np.mean(clean**2))
    target_power = signal_power / (10.0 ** (scenario.snr_db / 10.0))
    noise = _noise_like(clean, scenario, rng)
    noise *= math.sqrt(target_power / float(np.mean(noise**2)))
    audio = MultichannelAudio(samples=clean + noise, sample_rate=scenario.sample_rate)
    return audio, ground_truth(scenario)
