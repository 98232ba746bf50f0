"""Sound-direction estimation from multichannel audio.

The pipeline decomposes each spectral frame against a device steering
dictionary, scores every directional component on arrival order and
loudness, and pools per-frame azimuth likelihoods into a single estimate.
A shoebox room simulator and an SRP-PHAT baseline support end-to-end
evaluation; the harness subpackage adds config-driven batch runs.
"""

from .awd import AwdConfig, DirectionalComponent, decompose, match_frame_bins, residual_energy
from .baseline import SrpConfig, gcc_phat_spectrum, srp_phat_estimate, srp_phat_map
from .dictionary import (
    ArrayGeometry,
    DirectionGrid,
    SteeringDictionary,
    build_freefield_dictionary,
    build_rigid_sphere_dictionary,
    circular_array,
    load_dictionary,
    save_dictionary,
    star_array,
)
from .errors import (
    ConfigurationError,
    EmptyInputError,
    FormatError,
    GeometryError,
    InvalidStimulusError,
    MalformedInputError,
    NoEstimateError,
    WaveDoaError,
)
from .frontend import (
    MultichannelAudio,
    SigmoidWeightConfig,
    SpectralFrame,
    band_indices,
    frame_energy,
    read_wav,
    snr_weight,
    stft_frames,
    track_noise_floor,
    write_wav,
)
from .likelihood import (
    AggregateEstimate,
    DelayConfig,
    EnergyConfig,
    LikelihoodGrid,
    MleConfig,
    aggregate_and_estimate,
    component_energy,
    correlation_gate,
    energy_loglik,
    estimate_from_frames,
    first_arrival_loglik,
    frame_likelihoods,
    log_erfc,
    order_probability,
    pair_delay,
    pair_delay_matrix,
    update_frame_likelihood,
    wrap_angle,
)
from .simulator import (
    GroundTruth,
    RoomScenario,
    ground_truth,
    image_source_rir,
    rotated_mic_positions,
    simulate_capture,
    synth_speech_like,
)

__version__ = "0.1.0"

__all__ = [
    "AwdConfig",
    "DirectionalComponent",
    "decompose",
    "match_frame_bins",
    "residual_energy",
    "SrpConfig",
    "gcc_phat_spectrum",
    "srp_phat_estimate",
    "srp_phat_map",
    "ArrayGeometry",
    "DirectionGrid",
    "SteeringDictionary",
    "build_freefield_dictionary",
    "build_rigid_sphere_dictionary",
    "circular_array",
    "load_dictionary",
    "save_dictionary",
    "star_array",
    "ConfigurationError",
    "EmptyInputError",
    "FormatError",
    "GeometryError",
    "InvalidStimulusError",
    "MalformedInputError",
    "NoEstimateError",
    "WaveDoaError",
    "MultichannelAudio",
    "SigmoidWeightConfig",
    "SpectralFrame",
    "band_indices",
    "frame_energy",
    "read_wav",
    "snr_weight",
    "stft_frames",
    "track_noise_floor",
    "write_wav",
    "AggregateEstimate",
    "DelayConfig",
    "EnergyConfig",
    "LikelihoodGrid",
    "MleConfig",
    "aggregate_and_estimate",
    "component_energy",
    "correlation_gate",
    "energy_loglik",
    "estimate_from_frames",
    "first_arrival_loglik",
    "frame_likelihoods",
    "log_erfc",
    "order_probability",
    "pair_delay",
    "pair_delay_matrix",
    "update_frame_likelihood",
    "wrap_angle",
    "GroundTruth",
    "RoomScenario",
    "ground_truth",
    "image_source_rir",
    "rotated_mic_positions",
    "simulate_capture",
    "synth_speech_like",
    "__version__",
]
