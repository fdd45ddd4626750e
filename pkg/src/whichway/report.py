"""Figure rendering for each experiment's report.

Renders to files through the Agg backend so runs work headless.  Every
figure is drawn from the same scans and fits that go into the CSVs and
summary, never from a separate computation.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import (
    CoherenceResult,
    CommutationResult,
    KinkExperimentResult,
    QiSpeedResult,
    WhichWayResult,
    channel_counts,
)
from .fitting import KinkCurve, KinkFit, VisibilityEstimate, kink_model
from .montecarlo import FringeScan
from .output import IoError

__all__ = [
    "render_coherence",
    "render_commutation",
    "render_kink",
    "render_qispeed",
    "render_whichway",
]

DPI = 120


def _save(fig, path: str | Path) -> None:
    try:
        fig.savefig(path, dpi=DPI)
    except OSError as exc:
        raise IoError(f"cannot write figure {path}: {exc}") from None
    finally:
        plt.close(fig)


def _plot_fringe(
    ax,
    scan: FringeScan,
    channel: str,
    est: VisibilityEstimate | None,
    label: str,
    color: str,
) -> None:
    xs = np.array([p.delta_r for p in scan.points])
    ys = np.array([channel_counts(p, channel) for p in scan.points])
    ax.plot(xs, ys, "o", ms=4, color=color, label=label)
    if est is not None:
        dense = np.linspace(xs.min(), xs.max(), 400)
        model = est.offset + est.amplitude * np.cos(scan.k * dense + est.phase)
        ax.plot(dense, model, "-", lw=1, color=color)


def _plot_kink(
    ax, curve: KinkCurve, label: str, color: str, fit: KinkFit | None = None
) -> None:
    ax.errorbar(
        curve.k_values,
        curve.visibilities,
        yerr=curve.stderrs,
        fmt="o",
        ms=4,
        capsize=2,
        color=color,
        label=label,
    )
    if fit is not None:
        dense = np.linspace(curve.k_values.min(), curve.k_values.max(), 400)
        ax.plot(
            dense,
            kink_model(dense, fit.v_high, fit.v_low, fit.center, fit.width),
            "-",
            lw=1,
            color=color,
        )


def render_whichway(result: WhichWayResult, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    _plot_fringe(
        ax,
        result.scan_removed,
        "total",
        result.vis_alice_removed,
        f"no remote detectors, V={result.vis_alice_removed.value:.3f}",
        "C0",
    )
    _plot_fringe(
        ax,
        result.scan_gated,
        "coinc_atd",
        result.vis_alice_first,
        f"gated on transmitted port, V={result.vis_alice_first.value:.3f}",
        "C1",
    )
    ax.set_xlabel("interferometer displacement (m)")
    ax.set_ylabel("counts")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def render_kink(result: KinkExperimentResult, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    _plot_kink(ax, result.curve, f"channel {result.channel}", "C0", result.fit)
    ax.axvline(
        result.predicted_center, color="k", ls="--", lw=1, label="predicted threshold"
    )
    ax.set_xlabel("path offset K (m)")
    ax.set_ylabel("fringe visibility")
    ax.set_title(
        f"step at {result.fit.center:.3f} m, width {result.fit.width:.3f} m"
    )
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def render_qispeed(result: QiSpeedResult, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    _plot_kink(
        ax,
        result.kink_1.curve,
        f"separation {result.d_1:g} m",
        "C0",
        result.fit_1,
    )
    _plot_kink(
        ax,
        result.kink_2.curve,
        f"separation {result.d_2:g} m",
        "C1",
        result.fit_2,
    )
    parts = []
    if result.v_qi_diff is not None:
        parts.append(f"difference estimate {result.v_qi_diff:.2f} c")
    parts.append(f"lower bound {result.v_qi_min_bound:.2f} c")
    ax.set_title("; ".join(parts))
    ax.set_xlabel("path offset K (m)")
    ax.set_ylabel("fringe visibility")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def render_coherence(result: CoherenceResult, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if result.scan_open is not None and result.vis_case_open is not None:
        _plot_fringe(
            ax,
            result.scan_open,
            "coinc_ard",
            result.vis_case_open,
            f"blocker out, V={result.vis_case_open.value:.3f}",
            "C0",
        )
    if result.scan_blocked is not None and result.vis_case_blocked is not None:
        _plot_fringe(
            ax,
            result.scan_blocked,
            "coinc_sum",
            result.vis_case_blocked,
            f"blocker in arm, V={result.vis_case_blocked.value:.3f}",
            "C1",
        )
    ax.set_xlabel("interferometer displacement (m)")
    ax.set_ylabel("gated counts")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def render_commutation(result: CommutationResult, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    labels = {
        "coinc_atd": "transmitted port, gated",
        "coinc_ard": "reflected port, gated",
        "coinc_sum": "both ports summed, gated",
        "total": "gate off",
    }
    for i, (channel, label) in enumerate(labels.items()):
        _plot_kink(ax, result.curves[channel], label, f"C{i}")
    ax.axvline(
        result.predicted_center, color="k", ls="--", lw=1, label="predicted threshold"
    )
    verdict = (
        "step survives without gating"
        if result.kink_without_coincidence
        else "no ungated step"
    )
    ax.set_title(verdict)
    ax.set_xlabel("path offset K (m)")
    ax.set_ylabel("fringe visibility")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
