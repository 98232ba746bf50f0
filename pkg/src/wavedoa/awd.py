"""Greedy decomposition of a multichannel spectrum into plane-wave components.

Each pass projects the residual spectrum onto every dictionary direction at
once, keeps the direction with the largest in-band projection energy, and
subtracts that projection bin by bin. Because steering vectors are unit-norm
over microphones, the projection coefficient at each bin is just the inner
product, and every subtraction can only lower the residual energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dictionary import SteeringDictionary
from .errors import ConfigurationError
from .frontend import DEFAULT_BAND_HZ, SpectralFrame


@dataclass
class DirectionalComponent:
    """One extracted arrival: grid direction plus per-bin complex gains.

    energy stays 0.0 until the likelihood stage weighs the component.
    """

    direction_index: int
    theta: float
    phi: float
    alpha: np.ndarray
    bin_indices: np.ndarray
    energy: float = 0.0


@dataclass(frozen=True)
class AwdConfig:
    max_components: int = 6
    residual_stop_ratio: float = 0.05
    band_hz: tuple[float, float] = DEFAULT_BAND_HZ

    def __post_init__(self):
        if self.max_components < 1:
            raise ConfigurationError("max_components must be >= 1")
        if not 0.0 <= self.residual_stop_ratio < 1.0:
            raise ConfigurationError("residual_stop_ratio must lie in [0, 1)")
        low, high = self.band_hz
        if not 0 < low < high:
            raise ConfigurationError(f"invalid analysis band {self.band_hz}")


def match_frame_bins(frame: SpectralFrame, dictionary: SteeringDictionary) -> np.ndarray:
    """Map dictionary frequencies onto frame bin indices (exact bin match)."""
    idx = np.searchsorted(frame.bin_frequencies, dictionary.frequencies)
    idx = np.clip(idx, 0, frame.bin_frequencies.shape[0] - 1)
    found = frame.bin_frequencies[idx]
    if not np.allclose(found, dictionary.frequencies, rtol=1e-9, atol=1e-6):
        raise ConfigurationError(
            "dictionary frequencies do not line up with the frame's bins; "
            "rebuild the dictionary for this frame length and sample rate"
        )
    return idx


def decompose(
    frame: SpectralFrame,
    dictionary: SteeringDictionary,
    config: AwdConfig | None = None,
) -> list[DirectionalComponent]:
    """Extract up to max_components arrivals from one frame.

    Stops early once the residual drops below residual_stop_ratio of the
    frame's in-band energy. A silent frame yields an empty list.
    """
    config = config or AwdConfig()
    if frame.spectra.shape[1] != dictionary.geometry.num_mics:
        raise ConfigurationError(
            f"frame has {frame.spectra.shape[1]} channels, "
            f"dictionary expects {dictionary.geometry.num_mics}"
        )
    nyquist_hz = frame.bin_frequencies[-1] / (2.0 * np.pi)
    if nyquist_hz < config.band_hz[1]:
        raise ConfigurationError(
            f"frame bins reach {nyquist_hz:.0f} Hz, below the analysis band top"
        )
    bin_indices = match_frame_bins(frame, dictionary)
    residual = frame.spectra[bin_indices, :].copy()
    total_energy = float(np.sum(np.abs(residual) ** 2))
    if total_energy == 0.0:
        return []
    stop_energy = config.residual_stop_ratio * total_energy

    steering = dictionary.vectors  # [freq, dir, mic]
    grid = dictionary.grid.entries
    components: list[DirectionalComponent] = []
    for _ in range(config.max_components):
        inner = np.einsum("fdm,fm->fd", np.conj(steering), residual)
        scores = np.sum(np.abs(inner) ** 2, axis=0)
        best = int(np.argmax(scores))  # ties resolve to the lowest index
        if scores[best] <= 0.0:
            break
        alpha = inner[:, best]
        residual -= alpha[:, None] * steering[:, best, :]
        components.append(
            DirectionalComponent(
                direction_index=best,
                theta=float(grid[best, 0]),
                phi=float(grid[best, 1]),
                alpha=alpha,
                bin_indices=bin_indices,
            )
        )
        if float(np.sum(np.abs(residual) ** 2)) < stop_energy:
            break
    return components


def residual_energy(
    frame: SpectralFrame,
    dictionary: SteeringDictionary,
    components: list[DirectionalComponent],
) -> float:
    """In-band energy left after subtracting the given components."""
    if not components:
        bin_indices = match_frame_bins(frame, dictionary)
        return float(np.sum(np.abs(frame.spectra[bin_indices, :]) ** 2))
    residual = frame.spectra[components[0].bin_indices, :].copy()
    for comp in components:
        residual -= comp.alpha[:, None] * dictionary.vectors[:, comp.direction_index, :]
    return float(np.sum(np.abs(residual) ** 2))
