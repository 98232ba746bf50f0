"""Steered-response-power baseline with phase-transform weighting.

Each mic pair's cross-spectrum is whitened to unit magnitude, then steered
across a horizontal azimuth fan directly in the frequency domain; aligned
phases add, misaligned ones cancel, and no inverse transform is needed to
read the map off the grid. This is the reference point the likelihood
estimator is compared against, deliberately plain: no elevation search, no
component model, no post-hoc heuristics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dictionary import ArrayGeometry
from .errors import ConfigurationError, NoEstimateError
from .frontend import DEFAULT_BAND_HZ, SpectralFrame, band_indices


@dataclass(frozen=True)
class SrpConfig:
    azimuth_step_deg: float = 5.0
    band_hz: tuple[float, float] = DEFAULT_BAND_HZ
    elevation_deg: float = 90.0
    aggregate: str = "mean"

    def __post_init__(self):
        if self.azimuth_step_deg <= 0 or 360.0 % self.azimuth_step_deg > 1e-9:
            raise ConfigurationError("azimuth_step_deg must divide 360")
        low, high = self.band_hz
        if not 0 < low < high:
            raise ConfigurationError(f"invalid analysis band {self.band_hz}")
        if not 0.0 < self.elevation_deg < 180.0:
            raise ConfigurationError("elevation_deg must lie in (0, 180)")
        if self.aggregate not in ("mean", "max"):
            raise ConfigurationError("aggregate must be 'mean' or 'max'")

    def azimuths(self) -> np.ndarray:
        return np.deg2rad(np.arange(0.0, 360.0, self.azimuth_step_deg))


def gcc_phat_spectrum(x_spec: np.ndarray, y_spec: np.ndarray) -> np.ndarray:
    """Unit-magnitude cross-spectrum of two channels; silent bins stay zero."""
    if x_spec.shape != y_spec.shape:
        raise ConfigurationError("channel spectra must have equal bin counts")
    cross = x_spec * np.conj(y_spec)
    mag = np.abs(cross)
    out = np.zeros_like(cross)
    nonzero = mag > 0
    out[nonzero] = cross[nonzero] / mag[nonzero]
    return out


def srp_phat_map(
    frames: list[SpectralFrame],
    geometry: ArrayGeometry,
    cfg: SrpConfig | None = None,
    c: float = 343.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Steered response power per grid azimuth, pooled over frames."""
    cfg = cfg or SrpConfig()
    if not frames:
        raise NoEstimateError("no frames to steer")
    if frames[0].spectra.shape[1] != geometry.num_mics:
        raise ConfigurationError(
            f"frames have {frames[0].spectra.shape[1]} channels, "
            f"geometry expects {geometry.num_mics}"
        )

    azimuths = cfg.azimuths()
    theta = np.deg2rad(cfg.elevation_deg)
    directions = np.stack(
        [
            np.sin(theta) * np.cos(azimuths),
            np.sin(theta) * np.sin(azimuths),
            np.full_like(azimuths, np.cos(theta)),
        ],
        axis=1,
    )

    band = band_indices(frames[0].bin_frequencies, cfg.band_hz)
    if band.size == 0:
        raise ConfigurationError("analysis band holds no frequency bins")
    omega = frames[0].bin_frequencies[band]

    pairs = [(m, n) for m in range(geometry.num_mics) for n in range(m + 1, geometry.num_mics)]
    # steering[pair, azimuth, bin] undoes the pair's expected phase ramp
    pos = geometry.mic_positions
    pair_delays = np.stack([(pos[m] - pos[n]) @ directions.T / c for m, n in pairs])
    steering = np.exp(-1j * pair_delays[:, :, None] * omega[None, None, :])

    per_frame = np.zeros((len(frames), azimuths.shape[0]))
    for t, frame in enumerate(frames):
        for p, (m, n) in enumerate(pairs):
            whitened = gcc_phat_spectrum(frame.spectra[band, m], frame.spectra[band, n])
            per_frame[t] += np.real(steering[p] @ whitened)

    pooled = per_frame.mean(axis=0) if cfg.aggregate == "mean" else per_frame.max(axis=0)
    return azimuths, pooled


def srp_phat_estimate(
    frames: list[SpectralFrame],
    geometry: ArrayGeometry,
    cfg: SrpConfig | None = None,
    c: float = 343.0,
) -> float:
    """Azimuth (rad) of the strongest steered response; ties to the lowest."""
    azimuths, pooled = srp_phat_map(frames, geometry, cfg, c)
    if not np.any(pooled != 0.0):
        raise NoEstimateError("all frames were silent")
    return float(azimuths[int(np.argmax(pooled))])
