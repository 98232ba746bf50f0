"""Arrival-order and loudness scoring, likelihood grid, azimuth estimate.

The direct path reaches the array before any reflection, so the earliest
component is the best bearing witness. Arrival-time differences between two
components are read off the phase of their normalized gain ratio: stepping
that ratio by a small frequency offset turns a wrapped, slope-ambiguous phase
ramp into one narrow phase increment per bin whose weighted mean is the
delay. The probability that component l leads component k follows a Gaussian
error model, and each component accumulates log-probabilities of leading
every comparable peer. A loudness prior splits components into plausible
arrivals (uniform weight) and leftovers (a deep flat penalty). Both scores
paint a quadratic bump onto an azimuth grid per frame; frames combine by an
SNR-weighted sum and the pooled peak is the estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc, erfcx

from .awd import AwdConfig, DirectionalComponent, decompose
from .dictionary import SteeringDictionary
from .errors import ConfigurationError, NoEstimateError
from .frontend import SigmoidWeightConfig, SpectralFrame, snr_weight

TWO_PI = 2.0 * math.pi

# Bins whose gain magnitude falls below this fraction of the frame's in-band
# RMS carry no usable phase and are dropped from delay estimation.
MAGNITUDE_FLOOR_RATIO = 1e-6

DEFAULT_KAPPA = float(np.deg2rad(10.0) ** 2)


@dataclass(frozen=True)
class DelayConfig:
    """Settings for pairwise arrival-delay estimation.

    delta is the frequency step (rad/s) used for the phase-increment trick;
    it is snapped to a whole number of STFT bins at use time. sigma is the
    delay-noise scale of the order-probability model. Pairs whose gain
    magnitudes correlate below corr_threshold are judged unrelated and
    skipped. The step must keep delta * max_room_delay_s below pi, or the
    increment itself wraps and delays alias.
    """

    delta: float = TWO_PI * 62.5
    sigma: float = 0.25e-3
    corr_threshold: float = 0.4
    max_room_delay_s: float = 7.5e-3
    min_bins: int = 8
    weight_cfg: SigmoidWeightConfig = field(default_factory=SigmoidWeightConfig)

    def __post_init__(self):
        if self.delta <= 0:
            raise ConfigurationError("delta must be positive")
        if self.sigma <= 0:
            raise ConfigurationError("sigma must be positive")
        if not 0.0 <= self.corr_threshold <= 1.0:
            raise ConfigurationError("corr_threshold must lie in [0, 1]")
        if self.max_room_delay_s <= 0:
            raise ConfigurationError("max_room_delay_s must be positive")
        if self.min_bins < 2:
            raise ConfigurationError("min_bins must be >= 2")
        if self.delta * self.max_room_delay_s >= math.pi:
            raise ConfigurationError(
                "delta * max_room_delay_s must stay below pi, got "
                f"{self.delta * self.max_room_delay_s:.3f}"
            )


@dataclass(frozen=True)
class EnergyConfig:
    """Loudness gate: components above nu * strongest share a uniform prior,
    the rest get the flat penalty epsilon (natural-log units)."""

    nu: float = 0.5
    epsilon: float = -20.0

    def __post_init__(self):
        if not 0.0 < self.nu < 1.0:
            raise ConfigurationError("nu must lie in (0, 1)")
        if self.epsilon >= 0.0:
            raise ConfigurationError("epsilon must be negative")


@dataclass(frozen=True)
class LikelihoodGrid:
    """Azimuth log-likelihood samples; -inf marks untouched grid points."""

    azimuths: np.ndarray
    values: np.ndarray
    kappa: float = DEFAULT_KAPPA

    def __post_init__(self):
        if self.azimuths.shape != self.values.shape or self.azimuths.ndim != 1:
            raise ConfigurationError("azimuths and values must be matching 1-D arrays")
        if self.kappa <= 0:
            raise ConfigurationError("kappa must be positive")
        if np.any(np.isnan(self.values)) or np.any(self.values == np.inf):
            raise ConfigurationError("grid values must be finite or -inf")

    @classmethod
    def empty(cls, azimuths: np.ndarray, kappa: float = DEFAULT_KAPPA) -> "LikelihoodGrid":
        return cls(azimuths=azimuths, values=np.full(azimuths.shape, -np.inf), kappa=kappa)


@dataclass(frozen=True)
class AggregateEstimate:
    """Pooled grid, its peak azimuth, and the per-frame weights that built it."""

    aggregate: LikelihoodGrid
    phi_hat: float
    frame_weights: np.ndarray
    frames_used: int


@dataclass(frozen=True)
class MleConfig:
    """Everything the end-to-end maximum-likelihood estimator needs."""

    awd: AwdConfig = field(default_factory=AwdConfig)
    delay: DelayConfig = field(default_factory=DelayConfig)
    energy: EnergyConfig = field(default_factory=EnergyConfig)
    kappa: float = DEFAULT_KAPPA
    frame_weight_cfg: SigmoidWeightConfig = field(default_factory=SigmoidWeightConfig)

    def __post_init__(self):
        if self.kappa <= 0:
            raise ConfigurationError("kappa must be positive")


def log_erfc(x: float) -> float:
    """log(erfc(x)) without underflow for large positive x."""
    if x > 0.0:
        return float(np.log(erfcx(x)) - x * x)
    return float(np.log(erfc(x)))


def order_probability(rho: float, sigma: float) -> float:
    """P(the first component leads the second), delay gap rho, noise sigma."""
    return 0.5 * erfc(-rho / (sigma * math.sqrt(2.0)))


def correlation_gate(
    comp_a: DirectionalComponent, comp_b: DirectionalComponent, cfg: DelayConfig
) -> bool:
    """True when the two gain-magnitude profiles look like one source.

    Zero-variance profiles have no defined correlation and fail the gate.
    """
    mag_a = np.abs(comp_a.alpha)
    mag_b = np.abs(comp_b.alpha)
    std_a = float(mag_a.std())
    std_b = float(mag_b.std())
    if std_a == 0.0 or std_b == 0.0:
        return False
    corr = float(np.mean((mag_a - mag_a.mean()) * (mag_b - mag_b.mean())) / (std_a * std_b))
    return corr >= cfg.corr_threshold


def _bin_spacing(frame: SpectralFrame) -> float:
    freqs = frame.bin_frequencies
    if freqs.shape[0] < 2:
        raise ConfigurationError("frame has fewer than 2 frequency bins")
    return float(freqs[1] - freqs[0])


def pair_delay(
    comp_a: DirectionalComponent,
    comp_b: DirectionalComponent,
    frame: SpectralFrame,
    cfg: DelayConfig | None = None,
) -> float | None:
    """Mean arrival-time lead of comp_a over comp_b, in seconds.

    Positive means comp_a reached the array first. Returns None when too few
    bins carry usable magnitude on both sides of the frequency step.
    Swapping the arguments flips the sign exactly.
    """
    cfg = cfg or DelayConfig()
    if comp_a.bin_indices.shape != comp_b.bin_indices.shape or not np.array_equal(
        comp_a.bin_indices, comp_b.bin_indices
    ):
        raise ConfigurationError("components come from different decompositions")

    spacing = _bin_spacing(frame)
    shift = max(1, round(cfg.delta / spacing))
    delta_eff = shift * spacing
    if delta_eff * cfg.max_room_delay_s >= math.pi:
        raise ConfigurationError(
            "effective frequency step wraps at the configured maximum delay"
        )

    n_bins = comp_a.alpha.shape[0]
    if n_bins <= shift:
        return None

    mag_a = np.abs(comp_a.alpha)
    mag_b = np.abs(comp_b.alpha)
    floor = MAGNITUDE_FLOOR_RATIO * math.sqrt(
        float(np.mean(np.abs(frame.spectra[comp_a.bin_indices, :]) ** 2))
    )
    usable = (mag_a > floor) & (mag_b > floor)
    valid = usable[:-shift] & usable[shift:]
    if int(valid.sum()) < cfg.min_bins:
        return None

    # The normalized gain ratio has unit modulus, so only its phase matters:
    # the per-bin phase difference a - b. Stepping it by delta rotates the
    # ratio by delta * delay, so each bin's wrapped phase increment divided
    # by delta_eff is one delay estimate. Working on angles instead of
    # complex products keeps swapped arguments exactly sign-flipped.
    theta = np.angle(comp_a.alpha) - np.angle(comp_b.alpha)
    increment = theta[shift:] - theta[:-shift]
    wrapped = increment - TWO_PI * np.rint(increment / TWO_PI)
    phase = wrapped[valid]
    snr_db = frame.snr_db[comp_a.bin_indices]
    weights = snr_weight(snr_db[:-shift][valid], cfg.weight_cfg)
    weight_sum = float(np.sum(weights))
    if weight_sum <= 0.0:
        return None
    return float(np.sum(weights * phase) / (delta_eff * weight_sum))


def pair_delay_matrix(
    components: list[DirectionalComponent],
    frame: SpectralFrame,
    cfg: DelayConfig | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """All pairwise delays plus an availability mask.

    Entry [l, k] is the lead of component l over component k; the matrix is
    antisymmetric by construction. Pairs that fail the correlation gate or
    lack usable bins are marked unavailable on both sides.
    """
    cfg = cfg or DelayConfig()
    n = len(components)
    delays = np.zeros((n, n))
    available = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            if not correlation_gate(components[i], components[j], cfg):
                continue
            rho = pair_delay(components[i], components[j], frame, cfg)
            if rho is None:
                continue
            delays[i, j] = rho
            delays[j, i] = -rho
            available[i, j] = available[j, i] = True
    return delays, available


def first_arrival_loglik(
    delays: np.ndarray, sigma: float, available: np.ndarray | None = None
) -> np.ndarray:
    """Log-probability that each component is the earliest arrival.

    delays[l, k] > 0 means l leads k; every available peer contributes
    log P(l leads k) under a Gaussian delay-error model with scale sigma.
    Unavailable pairs are skipped on both sides. A lone component scores 0.
    """
    delays = np.asarray(delays, dtype=np.float64)
    if delays.ndim != 2 or delays.shape[0] != delays.shape[1]:
        raise ConfigurationError("delays must be a square matrix")
    if sigma <= 0:
        raise ConfigurationError("sigma must be positive")
    n = delays.shape[0]
    if available is None:
        available = ~np.eye(n, dtype=bool)
    scale = sigma * math.sqrt(2.0)
    beta = np.zeros(n)
    for l in range(n):
        for k in range(n):
            if k == l or not available[l, k]:
                continue
            beta[l] += log_erfc(-delays[l, k] / scale)
    return beta


def component_energy(
    comp: DirectionalComponent,
    frame: SpectralFrame,
    weight_cfg: SigmoidWeightConfig | None = None,
) -> float:
    """SNR-weighted in-band energy of one component's gain spectrum."""
    weight_cfg = weight_cfg or SigmoidWeightConfig()
    weights = snr_weight(frame.snr_db[comp.bin_indices], weight_cfg)
    return float(np.sum(np.abs(comp.alpha) ** 2 * weights))


def energy_loglik(energies, cfg: EnergyConfig | None = None) -> np.ndarray:
    """Loudness prior per component: -log(count passing) or epsilon.

    Components above nu times the strongest share a uniform prior, so their
    weights sum to one; the rest are not credible first arrivals and get the
    flat penalty. An all-zero frame counts everyone as passing rather than
    no one.
    """
    cfg = cfg or EnergyConfig()
    energies = np.asarray(energies, dtype=np.float64)
    if energies.ndim != 1 or energies.shape[0] == 0:
        raise ConfigurationError("energies must be a non-empty 1-D sequence")
    max_energy = float(energies.max())
    if max_energy == 0.0:
        passing = np.ones(energies.shape[0], dtype=bool)
    else:
        passing = energies > cfg.nu * max_energy
    gamma = np.full(energies.shape[0], cfg.epsilon)
    gamma[passing] = -math.log(int(passing.sum()))
    return gamma


def wrap_angle(angle):
    """Wrap to [-pi, pi)."""
    return (angle + np.pi) % TWO_PI - np.pi


def update_frame_likelihood(
    grid: LikelihoodGrid,
    components: list[DirectionalComponent],
    scores: np.ndarray,
) -> LikelihoodGrid:
    """Paint scored components onto the grid; returns a new grid.

    Each component adds a quadratic bump centered on its azimuth with peak
    equal to its score, spread by the grid's kappa, distances wrapped
    circularly. Overlapping bumps combine by max, not sum: components are
    competing explanations, not independent votes. Elevation is ignored.
    Re-applying the same components leaves the grid unchanged.
    """
    if len(components) != len(scores):
        raise ConfigurationError("one score per component is required")
    values = grid.values.copy()
    for comp, score in zip(components, scores):
        spread = wrap_angle(grid.azimuths - comp.phi) ** 2 / (2.0 * grid.kappa)
        np.maximum(values, score - spread, out=values)
    return LikelihoodGrid(azimuths=grid.azimuths, values=values, kappa=grid.kappa)


def aggregate_and_estimate(
    frame_grids: list[LikelihoodGrid],
    frame_snr_db,
    weight_cfg: SigmoidWeightConfig | None = None,
) -> AggregateEstimate:
    """SNR-weighted sum of per-frame grids, then the peak azimuth.

    Frames that produced no components (all grid points still -inf) are
    skipped. With no usable frames at all there is nothing to estimate and
    NoEstimateError is raised. Ties resolve to the lowest azimuth.
    """
    weight_cfg = weight_cfg or SigmoidWeightConfig()
    if len(frame_grids) == 0:
        raise NoEstimateError("no frames were given")
    if len(frame_grids) != len(frame_snr_db):
        raise ConfigurationError("one SNR value per frame grid is required")
    azimuths = frame_grids[0].azimuths
    eta = np.asarray([snr_weight(snr, weight_cfg) for snr in frame_snr_db])
    total = np.zeros(azimuths.shape[0])
    used = 0
    for grid, weight in zip(frame_grids, eta):
        if not np.array_equal(grid.azimuths, azimuths):
            raise ConfigurationError("all frame grids must share one azimuth set")
        if not np.any(np.isfinite(grid.values)):
            continue
        total += grid.values * weight
        used += 1
    if used == 0:
        raise NoEstimateError("no frame produced any directional component")
    peak = int(np.argmax(total))
    pooled = LikelihoodGrid(azimuths=azimuths, values=total, kappa=frame_grids[0].kappa)
    return AggregateEstimate(
        aggregate=pooled,
        phi_hat=float(azimuths[peak]),
        frame_weights=eta,
        frames_used=used,
    )


def frame_likelihoods(
    frames: list[SpectralFrame],
    dictionary: SteeringDictionary,
    config: MleConfig | None = None,
) -> tuple[list[LikelihoodGrid], list[float]]:
    """Decompose and score every frame; returns the grids and frame SNRs.

    Component energies are filled in on the components as a side effect of
    scoring. The grid's azimuth set is the dictionary's.
    """
    config = config or MleConfig()
    azimuths = dictionary.grid.azimuths
    grids: list[LikelihoodGrid] = []
    snrs: list[float] = []
    for frame in frames:
        components = decompose(frame, dictionary, config.awd)
        grid = LikelihoodGrid.empty(azimuths, kappa=config.kappa)
        if components:
            energies = []
            for comp in components:
                comp.energy = component_energy(comp, frame, config.delay.weight_cfg)
                energies.append(comp.energy)
            delays, available = pair_delay_matrix(components, frame, config.delay)
            beta = first_arrival_loglik(delays, config.delay.sigma, available)
            gamma = energy_loglik(energies, config.energy)
            grid = update_frame_likelihood(grid, components, beta + gamma)
        grids.append(grid)
        snrs.append(frame.frame_snr_db)
    return grids, snrs


def estimate_from_frames(
    frames: list[SpectralFrame],
    dictionary: SteeringDictionary,
    config: MleConfig | None = None,
) -> AggregateEstimate:
    """Full per-frame pipeline: decompose, score, paint, pool, pick the peak."""
    config = config or MleConfig()
    grids, snrs = frame_likelihoods(frames, dictionary, config)
    return aggregate_and_estimate(grids, snrs, config.frame_weight_cfg)
