"""Experiment configuration: one TOML document drives the whole batch.

Every tunable of the pipeline is surfaced here with the library defaults, so
a config file only needs the sections it wants to change. Parsing is strict:
unknown sections or keys are configuration errors, not silent typos.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..awd import AwdConfig
from ..baseline import SrpConfig
from ..dictionary import ArrayGeometry, DirectionGrid, circular_array, star_array
from ..errors import ConfigurationError
from ..frontend import SigmoidWeightConfig
from ..likelihood import DelayConfig, EnergyConfig, MleConfig
from ..simulator import RoomScenario

TWO_PI = 2.0 * math.pi

_PRESETS = {"circular8": circular_array, "star4": star_array}

_PLACEMENT_ANCHORS = {"center": (0.5, 0.5), "wall": (0.12, 0.5), "corner": (0.12, 0.12)}


@dataclass(frozen=True)
class RoomSpec:
    room_id: str
    dim: tuple[float, float, float]
    absorption: float
    max_image_order: int


@dataclass(frozen=True)
class StimulusSpec:
    kind: str = "synthetic"
    duration_s: float = 2.0
    files: tuple[str, ...] = ()


@dataclass(frozen=True)
class ScenarioAxes:
    """The evaluation grid: rooms x placements x angles x SNRs x repeats."""

    rooms: tuple[RoomSpec, ...]
    placements: tuple[str, ...]
    angles_deg: tuple[float, ...]
    snr_db: tuple[float, ...]
    distance_m: float = 1.5
    repeats: int = 1
    margin_m: float = 0.2


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    seed: int
    estimators: tuple[str, ...]
    sample_rate: float
    geometry: ArrayGeometry
    dictionary_model: str
    dictionary_path: str | None
    azimuth_step_deg: float
    elevations_deg: tuple[float, ...]
    frame_len: int
    hop: int
    window: str
    mle: MleConfig
    srp: SrpConfig
    stimulus: StimulusSpec
    axes: ScenarioAxes
    output_dir: str | None = None
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    def direction_grid(self) -> DirectionGrid:
        return DirectionGrid.regular(self.azimuth_step_deg, self.elevations_deg)

    def band_frequencies(self) -> np.ndarray:
        """Analysis-band bin frequencies (rad/s) of the configured STFT."""
        freqs_hz = np.fft.rfftfreq(self.frame_len, d=1.0 / self.sample_rate)
        low, high = self.mle.awd.band_hz
        return TWO_PI * freqs_hz[(freqs_hz >= low) & (freqs_hz <= high)]

    def config_hash(self) -> str:
        payload = {"raw": self.raw, "seed": self.seed, "estimators": list(self.estimators)}
        digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()
        return digest[:16]


@dataclass(frozen=True)
class RunSpec:
    """One utterance to simulate and estimate."""

    index: int
    record_id: str
    room_id: str
    placement: str
    angle_deg: float
    snr_db: float
    repeat: int
    stimulus_ref: str
    scenario: RoomScenario


def _take(table: dict, section: str, known: dict):
    """Pop known keys with defaults; reject anything left over."""
    out = {}
    table = dict(table)
    for key, default in known.items():
        out[key] = table.pop(key, default)
    if table:
        raise ConfigurationError(f"unknown key(s) in [{section}]: {sorted(table)}")
    return out


def _geometry_from(table: dict) -> ArrayGeometry:
    vals = _take(table, "array", {"preset": "circular8", "mic_positions": None, "name": None})
    if vals["mic_positions"] is not None:
        return ArrayGeometry(
            mic_positions=np.asarray(vals["mic_positions"], dtype=np.float64),
            name=vals["name"] or "custom",
        )
    preset = vals["preset"]
    if preset not in _PRESETS:
        raise ConfigurationError(f"unknown array preset {preset!r}; options: {sorted(_PRESETS)}")
    return _PRESETS[preset]()


def load_experiment_config(path) -> ExperimentConfig:
    """Parse and validate a TOML experiment file."""
    if not os.path.exists(path):
        raise ConfigurationError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"config is not valid TOML: {exc}") from exc
    return experiment_config_from_dict(doc)


def experiment_config_from_dict(doc: dict) -> ExperimentConfig:
    known_sections = {
        "experiment",
        "array",
        "dictionary",
        "stft",
        "estimator",
        "stimulus",
        "scenarios",
    }
    unknown = set(doc) - known_sections
    if unknown:
        raise ConfigurationError(f"unknown config section(s): {sorted(unknown)}")

    exp = _take(
        doc.get("experiment", {}),
        "experiment",
        {
            "name": "experiment",
            "seed": 0,
            "estimators": ["mle", "srp"],
            "sample_rate": 16000.0,
            "output_dir": None,
        },
    )
    for est in exp["estimators"]:
        if est not in ("mle", "srp"):
            raise ConfigurationError(f"unknown estimator {est!r}; options: mle, srp")
    if not exp["estimators"]:
        raise ConfigurationError("estimators list is empty")

    geometry = _geometry_from(doc.get("array", {}))

    dic = _take(
        doc.get("dictionary", {}),
        "dictionary",
        {
            "model": "free-field",
            "path": None,
            "azimuth_step_deg": 5.0,
            "elevations_deg": [60.0, 90.0, 120.0],
        },
    )
    if dic["model"] not in ("free-field", "rigid-sphere"):
        raise ConfigurationError("dictionary model must be 'free-field' or 'rigid-sphere'")
    if dic["path"] is not None and not os.path.exists(dic["path"]):
        raise ConfigurationError(f"dictionary file not found: {dic['path']}")

    stft = _take(doc.get("stft", {}), "stft", {"frame_len": 512, "hop": 256, "window": "hann"})

    est = _take(
        doc.get("estimator", {}),
        "estimator",
        {
            "band_hz": [300.0, 4000.0],
            "max_components": 6,
            "residual_stop_ratio": 0.05,
            "delta_hz": 62.5,
            "sigma_ms": 0.25,
            "corr_threshold": 0.4,
            "max_room_delay_ms": 7.5,
            "min_bins": 8,
            "nu": 0.5,
            "epsilon": -20.0,
            "kappa_deg": 10.0,
            "weight_midpoint_db": 6.0,
            "weight_slope": 0.5,
            "srp_aggregate": "mean",
        },
    )
    band = (float(est["band_hz"][0]), float(est["band_hz"][1]))
    weight_cfg = SigmoidWeightConfig(
        midpoint_db=float(est["weight_midpoint_db"]), slope=float(est["weight_slope"])
    )
    mle = MleConfig(
        awd=AwdConfig(
            max_components=int(est["max_components"]),
            residual_stop_ratio=float(est["residual_stop_ratio"]),
            band_hz=band,
        ),
        delay=DelayConfig(
            delta=TWO_PI * float(est["delta_hz"]),
            sigma=float(est["sigma_ms"]) * 1e-3,
            corr_threshold=float(est["corr_threshold"]),
            max_room_delay_s=float(est["max_room_delay_ms"]) * 1e-3,
            min_bins=int(est["min_bins"]),
            weight_cfg=weight_cfg,
        ),
        energy=EnergyConfig(nu=float(est["nu"]), epsilon=float(est["epsilon"])),
        kappa=float(np.deg2rad(est["kappa_deg"]) ** 2),
        frame_weight_cfg=weight_cfg,
    )
    srp = SrpConfig(
        azimuth_step_deg=float(dic["azimuth_step_deg"]),
        band_hz=band,
        aggregate=str(est["srp_aggregate"]),
    )

    stim = _take(
        doc.get("stimulus", {}),
        "stimulus",
        {"kind": "synthetic", "duration_s": 2.0, "files": []},
    )
    if stim["kind"] not in ("synthetic", "files"):
        raise ConfigurationError("stimulus kind must be 'synthetic' or 'files'")
    if stim["kind"] == "files":
        if not stim["files"]:
            raise ConfigurationError("stimulus kind 'files' requires a non-empty files list")
        for f in stim["files"]:
            if not os.path.exists(f):
                raise ConfigurationError(f"stimulus file not found: {f}")
    if stim["duration_s"] <= 0:
        raise ConfigurationError("stimulus duration_s must be positive")

    sc = _take(
        doc.get("scenarios", {}),
        "scenarios",
        {
            "rooms": [{"dim": [4.0, 5.0, 3.0], "absorption": 0.3, "max_image_order": 6}],
            "placements": ["center"],
            "angles_deg": None,
            "angle_step_deg": 10.0,
            "snr_db": [0.0, 5.0, 10.0, 20.0, 30.0],
            "distance_m": 1.5,
            "repeats": 1,
            "margin_m": 0.2,
        },
    )
    rooms = []
    for i, room in enumerate(sc["rooms"]):
        vals = _take(
            dict(room),
            f"scenarios.rooms[{i}]",
            {"dim": [4.0, 5.0, 3.0], "absorption": 0.3, "max_image_order": 6, "id": f"room{i}"},
        )
        rooms.append(
            RoomSpec(
                room_id=str(vals["id"]),
                dim=tuple(float(x) for x in vals["dim"]),
                absorption=float(vals["absorption"]),
                max_image_order=int(vals["max_image_order"]),
            )
        )
    if not rooms:
        raise ConfigurationError("scenario grid has no rooms")
    for placement in sc["placements"]:
        if placement not in _PLACEMENT_ANCHORS:
            raise ConfigurationError(
                f"unknown placement {placement!r}; options: {sorted(_PLACEMENT_ANCHORS)}"
            )
    if not sc["placements"]:
        raise ConfigurationError("scenario grid has no placements")
    if sc["angles_deg"] is not None:
        angles = tuple(float(a) % 360.0 for a in sc["angles_deg"])
    else:
        step = float(sc["angle_step_deg"])
        if step <= 0 or 360.0 % step > 1e-9:
            raise ConfigurationError("angle_step_deg must divide 360")
        angles = tuple(float(a) for a in np.arange(0.0, 360.0, step))
    if not angles:
        raise ConfigurationError("scenario grid has no source angles")
    az_step = float(dic["azimuth_step_deg"])
    for a in angles:
        if min(a % az_step, az_step - a % az_step) > 1e-9:
            raise ConfigurationError(
                f"source angle {a} deg is not on the dictionary azimuth grid ({az_step} deg step)"
            )
    if not sc["snr_db"]:
        raise ConfigurationError("scenario grid has no SNR levels")
    if int(sc["repeats"]) < 1:
        raise ConfigurationError("repeats must be >= 1")

    axes = ScenarioAxes(
        rooms=tuple(rooms),
        placements=tuple(str(p) for p in sc["placements"]),
        angles_deg=angles,
        snr_db=tuple(float(s) for s in sc["snr_db"]),
        distance_m=float(sc["distance_m"]),
        repeats=int(sc["repeats"]),
        margin_m=float(sc["margin_m"]),
    )

    return ExperimentConfig(
        name=str(exp["name"]),
        seed=int(exp["seed"]),
        estimators=tuple(exp["estimators"]),
        sample_rate=float(exp["sample_rate"]),
        geometry=geometry,
        dictionary_model=str(dic["model"]),
        dictionary_path=dic["path"],
        azimuth_step_deg=az_step,
        elevations_deg=tuple(float(e) for e in dic["elevations_deg"]),
        frame_len=int(stft["frame_len"]),
        hop=int(stft["hop"]),
        window=str(stft["window"]),
        mle=mle,
        srp=srp,
        stimulus=StimulusSpec(
            kind=str(stim["kind"]),
            duration_s=float(stim["duration_s"]),
            files=tuple(str(f) for f in stim["files"]),
        ),
        axes=axes,
        output_dir=exp["output_dir"],
        raw=doc,
    )


def _array_position(room: RoomSpec, placement: str, axes: ScenarioAxes) -> np.ndarray:
    """Anchor the array at the placement, pulled in so the source ring fits."""
    lo = axes.distance_m + axes.margin_m
    fx, fy = _PLACEMENT_ANCHORS[placement]
    pos = np.empty(3)
    for axis, frac in enumerate((fx, fy)):
        size = room.dim[axis]
        if lo > size - lo:
            raise ConfigurationError(
                f"room {room.room_id} ({size} m on axis {axis}) cannot hold a "
                f"{axes.distance_m} m source ring with {axes.margin_m} m margin"
            )
        pos[axis] = float(np.clip(frac * size, lo, size - lo))
    pos[2] = float(np.clip(room.dim[2] / 2.0, axes.margin_m, room.dim[2] - axes.margin_m))
    return pos


def expand_runs(cfg: ExperimentConfig) -> list[RunSpec]:
    """Materialize the scenario grid into concrete, ordered run specs."""
    stimuli = cfg.stimulus.files if cfg.stimulus.kind == "files" else ("synthetic",)
    runs: list[RunSpec] = []
    index = 0
    for room in cfg.axes.rooms:
        for placement in cfg.axes.placements:
            center = _array_position(room, placement, cfg.axes)
            for angle in cfg.axes.angles_deg:
                rad = math.radians(angle)
                source = center + cfg.axes.distance_m * np.array(
                    [math.cos(rad), math.sin(rad), 0.0]
                )
                for snr in cfg.axes.snr_db:
                    for repeat in range(cfg.axes.repeats):
                        for stim_ref in stimuli:
                            scenario = RoomScenario(
                                room_dim=room.dim,
                                source_pos=tuple(source),
                                array_center=tuple(center),
                                absorption=room.absorption,
                                max_image_order=room.max_image_order,
                                snr_db=snr,
                                sample_rate=cfg.sample_rate,
                            )
                            record_id = (
                                f"{room.room_id}-{placement}-az{angle:07.2f}"
                                f"-snr{snr:+05.1f}-r{repeat}"
                            )
                            if len(stimuli) > 1:
                                record_id += f"-s{stimuli.index(stim_ref)}"
                            runs.append(
                                RunSpec(
                                    index=index,
                                    record_id=record_id,
                                    room_id=room.room_id,
                                    placement=placement,
                                    angle_deg=angle,
                                    snr_db=snr,
                                    repeat=repeat,
                                    stimulus_ref=stim_ref,
                                    scenario=scenario,
                                )
                            )
                            index += 1
    if not runs:
        raise ConfigurationError("scenario grid expanded to zero runs")
    return runs
