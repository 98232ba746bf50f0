"""Shared fixtures: geometries, dictionaries, and synthetic frame helpers."""
from __future__ import annotations

import numpy as np
import pytest

from wavedoa import (
    ArrayGeometry,
    DirectionGrid,
    MultichannelAudio,
    SpectralFrame,
    SteeringDictionary,
    build_freefield_dictionary,
    circular_array,
    star_array,
    synth_speech_like,
    write_wav,
)

FS = 16000.0
FRAME_LEN = 512


def band_omegas(frame_len: int = FRAME_LEN, fs: float = FS,
                band: tuple[float, float] = (300.0, 4000.0)) -> np.ndarray:
    hz = np.fft.rfftfreq(frame_len, 1.0 / fs)
    return 2.0 * np.pi * hz[(hz >= band[0]) & (hz <= band[1])]


def band_bin_indices(frame_len: int = FRAME_LEN, fs: float = FS,
                     band: tuple[float, float] = (300.0, 4000.0)) -> np.ndarray:
    hz = np.fft.rfftfreq(frame_len, 1.0 / fs)
    return np.flatnonzero((hz >= band[0]) & (hz <= band[1]))


@pytest.fixture(scope="session")
def grid5() -> DirectionGrid:
    return DirectionGrid.regular(azimuth_step_deg=5.0)


@pytest.fixture(scope="session")
def circ8() -> ArrayGeometry:
    return circular_array()


@pytest.fixture(scope="session")
def star4() -> ArrayGeometry:
    return star_array()


@pytest.fixture(scope="session")
def dict_circ8(circ8: ArrayGeometry, grid5: DirectionGrid) -> SteeringDictionary:
    return build_freefield_dictionary(circ8, grid5, band_omegas())


@pytest.fixture(scope="session")
def dict_star4(star4: ArrayGeometry, grid5: DirectionGrid) -> SteeringDictionary:
    return build_freefield_dictionary(star4, grid5, band_omegas())


def make_frame(dictionary: SteeringDictionary, parts: list[tuple[int, np.ndarray]],
               frame_len: int = FRAME_LEN, fs: float = FS,
               noise_rms: float = 0.0, rng: np.random.Generator | None = None,
               index: int = 0) -> SpectralFrame:
    """Synthesize a frame whose in-band bins hold a sum of dictionary atoms.

    parts: list of (direction_index, per-bin complex gains).  Out-of-band bins
    stay zero; snr_db is left high so weighting stays near 1.
    """
    n_bins = frame_len // 2 + 1
    bins = band_bin_indices(frame_len, fs)
    if len(bins) != dictionary.vectors.shape[0]:
        raise AssertionError("fixture dictionary does not match the default band")
    spectra = np.zeros((n_bins, dictionary.vectors.shape[2]), dtype=np.complex128)
    for direction_index, alpha in parts:
        atoms = dictionary.vectors[:, direction_index, :]
        spectra[bins, :] += np.asarray(alpha, dtype=np.complex128)[:, None] * atoms
    if noise_rms > 0.0:
        if rng is None:
            rng = np.random.default_rng(0)
        noise = rng.standard_normal(spectra.shape) + 1j * rng.standard_normal(spectra.shape)
        spectra[bins, :] += noise_rms / np.sqrt(2.0) * noise[bins, :]
    omega = 2.0 * np.pi * np.fft.rfftfreq(frame_len, 1.0 / fs)
    return SpectralFrame(frame_index=index, spectra=spectra, bin_frequencies=omega,
                         snr_db=np.full(n_bins, 60.0), frame_snr_db=60.0)


@pytest.fixture(scope="session")
def babble_wav(tmp_path_factory: pytest.TempPathFactory) -> str:
    """A 20 s speech-shaped noise file for recorded-noise scenarios."""
    sig = synth_speech_like(20.0, FS, np.random.default_rng(999), lead_silence_s=0.05)
    path = tmp_path_factory.mktemp("noise") / "babble.wav"
    write_wav(str(path), MultichannelAudio(samples=sig, sample_rate=FS))
    return str(path)
