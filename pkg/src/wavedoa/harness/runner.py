"""Batch execution: simulate every run spec, estimate, collect records.

Each run draws its random stream from (experiment seed, run index) only, so
results do not depend on worker scheduling, and the record list is sorted
before reporting. Per-run failures become 'failed' records that aggregates
exclude but count.
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..baseline import srp_phat_estimate
from ..dictionary import SteeringDictionary, build_freefield_dictionary, build_rigid_sphere_dictionary, load_dictionary
from ..errors import ConfigurationError
from ..frontend import read_wav, stft_frames, track_noise_floor, write_wav
from ..likelihood import aggregate_and_estimate, frame_likelihoods
from ..simulator import simulate_capture, synth_speech_like
from .config import ExperimentConfig, RunSpec, expand_runs
from .report import ErrorReport, build_error_report, circular_abs_error, write_report_files

log = logging.getLogger("wavedoa.harness")

THREADS_ENV = "WAVEDOA_THREADS"


@dataclass(frozen=True)
class RunRecord:
    """One (utterance, estimator) outcome."""

    index: int
    record_id: str
    room_id: str
    placement: str
    angle_deg: float
    snr_db: float
    repeat: int
    stimulus: str
    estimator: str
    status: str
    estimate_deg: float | None
    error_deg: float | None
    message: str = ""


def worker_count() -> int:
    """Pool size: WAVEDOA_THREADS if set, else capped CPU count."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigurationError(f"{THREADS_ENV} must be >= 1, got {n}")
    return n


def build_dictionary(cfg: ExperimentConfig) -> SteeringDictionary:
    """Load the configured dictionary file, or build one for this setup."""
    if cfg.dictionary_path is not None:
        dictionary = load_dictionary(cfg.dictionary_path)
        if dictionary.geometry.num_mics != cfg.geometry.num_mics:
            raise ConfigurationError(
                "dictionary file was built for a different microphone count"
            )
        if not np.allclose(dictionary.frequencies, cfg.band_frequencies()):
            raise ConfigurationError(
                "dictionary file frequencies do not match the configured STFT band"
            )
        return dictionary
    grid = cfg.direction_grid()
    freqs = cfg.band_frequencies()
    if cfg.dictionary_model == "rigid-sphere":
        return build_rigid_sphere_dictionary(cfg.geometry, grid, freqs)
    return build_freefield_dictionary(cfg.geometry, grid, freqs)


def _load_stimulus(spec: RunSpec, cfg: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.stimulus.kind == "synthetic":
        return synth_speech_like(cfg.stimulus.duration_s, cfg.sample_rate, rng)
    audio = read_wav(spec.stimulus_ref)
    if audio.sample_rate != cfg.sample_rate:
        raise ConfigurationError(
            f"stimulus {spec.stimulus_ref} has sample rate {audio.sample_rate}, "
            f"experiment expects {cfg.sample_rate}"
        )
    return audio.samples[:, 0]


def _failed(spec: RunSpec, estimator: str, message: str) -> RunRecord:
    return RunRecord(
        index=spec.index,
        record_id=spec.record_id,
        room_id=spec.room_id,
        placement=spec.placement,
        angle_deg=spec.angle_deg,
        snr_db=spec.snr_db,
        repeat=spec.repeat,
        stimulus=spec.stimulus_ref,
        estimator=estimator,
        status="failed",
        estimate_deg=None,
        error_deg=None,
        message=message,
    )


def _dump_frame_grids(grids, record_id: str, dump_dir) -> None:
    path = os.path.join(dump_dir, f"likelihood_{record_id}.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write("frame,azimuth_deg,value\n")
        for t, grid in enumerate(grids):
            for az, val in zip(grid.azimuths, grid.values):
                text = "-inf" if val == -np.inf else f"{val:.6f}"
                fh.write(f"{t},{math.degrees(float(az)):.6f},{text}\n")


def _execute(
    spec: RunSpec,
    cfg: ExperimentConfig,
    dictionary: SteeringDictionary,
    dump_dir=None,
) -> list[RunRecord]:
    rng = np.random.default_rng([cfg.seed, spec.index])
    try:
        speech = _load_stimulus(spec, cfg, rng)
        audio, truth = simulate_capture(speech, spec.scenario, cfg.geometry, rng)
        frames = track_noise_floor(stft_frames(audio, cfg.frame_len, cfg.hop, cfg.window))
    except Exception as exc:
        message = f"{type(exc).__name__}: {exc}"
        log.warning("run %s failed before estimation: %s", spec.record_id, message)
        return [_failed(spec, est, message) for est in cfg.estimators]

    records = []
    for estimator in cfg.estimators:
        try:
            if estimator == "mle":
                grids, snrs = frame_likelihoods(frames, dictionary, cfg.mle)
                if dump_dir is not None:
                    _dump_frame_grids(grids, spec.record_id, dump_dir)
                estimate = aggregate_and_estimate(grids, snrs, cfg.mle.frame_weight_cfg).phi_hat
            else:
                estimate = srp_phat_estimate(frames, cfg.geometry, cfg.srp)
            records.append(
                RunRecord(
                    index=spec.index,
                    record_id=spec.record_id,
                    room_id=spec.room_id,
                    placement=spec.placement,
                    angle_deg=spec.angle_deg,
                    snr_db=spec.snr_db,
                    repeat=spec.repeat,
                    stimulus=spec.stimulus_ref,
                    estimator=estimator,
                    status="ok",
                    estimate_deg=math.degrees(estimate),
                    error_deg=circular_abs_error(truth.azimuth, estimate),
                )
            )
        except Exception as exc:
            message = f"{type(exc).__name__}: {exc}"
            log.warning("estimator %s failed on %s: %s", estimator, spec.record_id, message)
            records.append(_failed(spec, estimator, message))
    return records


def run_experiment(cfg: ExperimentConfig, dump_likelihood: bool = False) -> ErrorReport:
    """Simulate and estimate the whole grid; returns the aggregated report.

    When cfg.output_dir is set, the report files are written there (plus
    per-frame likelihood dumps under likelihood/ when requested).
    """
    runs = expand_runs(cfg)
    dictionary = build_dictionary(cfg)
    dump_dir = None
    if dump_likelihood:
        if cfg.output_dir is None:
            raise ConfigurationError("likelihood dumps need an output directory")
        dump_dir = os.path.join(cfg.output_dir, "likelihood")
        os.makedirs(dump_dir, exist_ok=True)

    log.info("running %d utterances x %d estimator(s)", len(runs), len(cfg.estimators))
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        batches = list(pool.map(lambda s: _execute(s, cfg, dictionary, dump_dir), runs))
    records = sorted(
        (r for batch in batches for r in batch), key=lambda r: (r.index, r.estimator)
    )
    report = build_error_report(records)
    if cfg.output_dir is not None:
        write_report_files(report, cfg.output_dir, cfg.config_hash(), cfg.seed)
    return report


def generate_captures(cfg: ExperimentConfig, out_dir) -> list[str]:
    """Write every run's capture as WAV plus a ground-truth JSONL sidecar."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    truth_path = os.path.join(out_dir, "ground_truth.jsonl")
    with open(truth_path, "w", newline="\n") as truth_fh:
        for spec in expand_runs(cfg):
            rng = np.random.default_rng([cfg.seed, spec.index])
            speech = _load_stimulus(spec, cfg, rng)
            audio, truth = simulate_capture(speech, spec.scenario, cfg.geometry, rng)
            wav_path = os.path.join(out_dir, f"capture_{spec.record_id}.wav")
            write_wav(wav_path, audio)
            paths.append(wav_path)
            truth_fh.write(
                json.dumps(
                    {
                        "record_id": spec.record_id,
                        "azimuth_deg": round(math.degrees(truth.azimuth), 6),
                        "elevation_deg": round(math.degrees(truth.elevation), 6),
                        "distance_m": round(truth.distance, 6),
                        "snr_db": spec.snr_db,
                        "room_id": spec.room_id,
                        "placement": spec.placement,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    paths.append(truth_path)
    return paths
