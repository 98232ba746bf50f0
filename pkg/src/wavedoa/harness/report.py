"""Error metrics and report files: records, MAE-by-SNR, CDF, summary.

All files are written with fixed field order, fixed float formatting, and
sorted rows, so identical inputs produce byte-identical outputs.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError

_FLOAT_FMT = "{:.6f}"


def circular_abs_error(truth_rad: float, estimate_rad: float) -> float:
    """Absolute azimuth error in degrees on the circle, in [0, 180]."""
    diff = abs(math.degrees(estimate_rad) - math.degrees(truth_rad)) % 360.0
    return min(diff, 360.0 - diff)


@dataclass(frozen=True)
class EstimatorStats:
    estimator: str
    count: int
    excluded: int
    mae_deg: float
    p50_deg: float
    p90_deg: float
    p95_deg: float


@dataclass(frozen=True)
class ErrorReport:
    """Aggregated view over run records.

    records: the raw per-utterance rows (all of them, failures included).
    mae_by_snr: (estimator, snr_db) -> (mae_deg, count).
    cdf: estimator -> (sorted error array, cumulative fraction array).
    stats: per-estimator percentile table, failures excluded but counted.
    """

    records: list
    mae_by_snr: dict
    cdf: dict
    stats: dict


def _ok_errors(records, estimator: str) -> np.ndarray:
    return np.array(
        [r.error_deg for r in records if r.estimator == estimator and r.status == "ok"]
    )


def build_error_report(records) -> ErrorReport:
    """Aggregate records into MAE-by-SNR, CDFs, and percentile stats."""
    if not records:
        raise ConfigurationError("no records to report on")
    estimators = sorted({r.estimator for r in records})
    mae_by_snr = {}
    cdf = {}
    stats = {}
    for est in estimators:
        ok = [r for r in records if r.estimator == est and r.status == "ok"]
        failed = sum(1 for r in records if r.estimator == est and r.status != "ok")
        errors = np.array([r.error_deg for r in ok])
        for snr in sorted({r.snr_db for r in ok}):
            level = np.array([r.error_deg for r in ok if r.snr_db == snr])
            mae_by_snr[(est, snr)] = (float(level.mean()), int(level.size))
        if errors.size:
            ordered = np.sort(errors)
            fractions = np.arange(1, ordered.size + 1) / ordered.size
            cdf[est] = (ordered, fractions)
            stats[est] = EstimatorStats(
                estimator=est,
                count=int(errors.size),
                excluded=failed,
                mae_deg=float(errors.mean()),
                p50_deg=float(np.percentile(errors, 50)),
                p90_deg=float(np.percentile(errors, 90)),
                p95_deg=float(np.percentile(errors, 95)),
            )
        else:
            cdf[est] = (np.zeros(0), np.zeros(0))
            stats[est] = EstimatorStats(est, 0, failed, math.nan, math.nan, math.nan, math.nan)
    return ErrorReport(records=list(records), mae_by_snr=mae_by_snr, cdf=cdf, stats=stats)


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, float):
        return _FLOAT_FMT.format(value)
    return str(value)


def write_records_csv(records, path) -> None:
    header = (
        "record_id,room_id,placement,angle_deg,snr_db,repeat,stimulus,"
        "estimator,status,estimate_deg,error_deg,message\n"
    )
    with open(path, "w", newline="\n") as fh:
        fh.write(header)
        for r in records:
            message = r.message.replace(",", ";").replace("\n", " ")
            fh.write(
                ",".join(
                    [
                        r.record_id,
                        r.room_id,
                        r.placement,
                        _fmt(r.angle_deg),
                        _fmt(r.snr_db),
                        str(r.repeat),
                        r.stimulus,
                        r.estimator,
                        r.status,
                        _fmt(r.estimate_deg),
                        _fmt(r.error_deg),
                        message,
                    ]
                )
                + "\n"
            )


def write_mae_by_snr_csv(report: ErrorReport, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("estimator,snr_db,count,mae_deg\n")
        for (est, snr) in sorted(report.mae_by_snr):
            mae, count = report.mae_by_snr[(est, snr)]
            fh.write(f"{est},{_fmt(snr)},{count},{_fmt(mae)}\n")


def write_cdf_csv(report: ErrorReport, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("estimator,error_deg,fraction\n")
        for est in sorted(report.cdf):
            errors, fractions = report.cdf[est]
            for e, f in zip(errors, fractions):
                fh.write(f"{est},{_fmt(float(e))},{_fmt(float(f))}\n")


def write_summary_json(report: ErrorReport, path, config_hash: str, seed: int) -> None:
    body = {
        "config_hash": config_hash,
        "seed": seed,
        "n_records": len(report.records),
        "estimators": {
            est: {
                "count": s.count,
                "excluded": s.excluded,
                "mae_deg": None if math.isnan(s.mae_deg) else round(s.mae_deg, 6),
                "p50_deg": None if math.isnan(s.p50_deg) else round(s.p50_deg, 6),
                "p90_deg": None if math.isnan(s.p90_deg) else round(s.p90_deg, 6),
                "p95_deg": None if math.isnan(s.p95_deg) else round(s.p95_deg, 6),
            }
            for est, s in report.stats.items()
        },
        "note": "plain SRP-PHAT baseline without production robustness heuristics",
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report_files(report: ErrorReport, out_dir, config_hash: str, seed: int) -> dict:
    """Write all delimited outputs; returns {name: path}."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "records": os.path.join(out_dir, "records.csv"),
        "mae_by_snr": os.path.join(out_dir, "mae_by_snr.csv"),
        "cdf": os.path.join(out_dir, "cdf.csv"),
        "summary": os.path.join(out_dir, "summary.json"),
    }
    write_records_csv(report.records, paths["records"])
    write_mae_by_snr_csv(report, paths["mae_by_snr"])
    write_cdf_csv(report, paths["cdf"])
    write_summary_json(report, paths["summary"], config_hash, seed)
    return paths
