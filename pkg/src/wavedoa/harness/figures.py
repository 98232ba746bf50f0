"""Figure rendering for the report path: MAE-vs-SNR and error-CDF PNGs."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .report import ErrorReport

_STYLE = {"mle": {"color": "tab:blue", "marker": "o"}, "srp": {"color": "tab:orange", "marker": "s"}}


def _style(estimator: str) -> dict:
    return _STYLE.get(estimator, {"marker": "."})


def render_mae_vs_snr(report: ErrorReport, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    estimators = sorted({est for est, _ in report.mae_by_snr})
    for est in estimators:
        levels = sorted(snr for e, snr in report.mae_by_snr if e == est)
        maes = [report.mae_by_snr[(est, snr)][0] for snr in levels]
        ax.plot(levels, maes, label=est, **_style(est))
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("mean absolute azimuth error (deg)")
    ax.set_title("Accuracy vs noise level")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_error_cdf(report: ErrorReport, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for est in sorted(report.cdf):
        errors, fractions = report.cdf[est]
        if errors.size == 0:
            continue
        ax.step(errors, fractions, where="post", label=est, color=_style(est).get("color"))
    ax.set_xlabel("absolute azimuth error (deg)")
    ax.set_ylabel("cumulative fraction")
    ax.set_title("Error distribution")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_figures(report: ErrorReport, out_dir) -> dict:
    """Render both report figures; returns {name: path}."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "mae_vs_snr": os.path.join(out_dir, "mae_vs_snr.png"),
        "error_cdf": os.path.join(out_dir, "error_cdf.png"),
    }
    render_mae_vs_snr(report, paths["mae_vs_snr"])
    render_error_cdf(report, paths["error_cdf"])
    return paths
