"""Bit-stable serialization of scans and fitted summaries.

CSV rows carry raw counts per (path offset, displacement) cell with a
fixed header; floats are written with repr so identical runs produce
identical bytes.  The summary is JSON with sorted keys and a schema
version, holding fitted parameters, verdicts, the config hash, and the
list of artifacts written next to it.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .experiments import (
    CoherenceResult,
    CommutationResult,
    KinkExperimentResult,
    QiSpeedResult,
    WhichWayResult,
)
from .fitting import KinkCurve, KinkFit, VisibilityEstimate
from .montecarlo import FringeScan

__all__ = [
    "CSV_HEADER",
    "IoError",
    "RunManifest",
    "SCHEMA_VERSION",
    "summary_payload",
    "scan_csv_text",
    "write_text",
    "coherence_outputs",
    "commutation_outputs",
    "kink_outputs",
    "qispeed_outputs",
    "whichway_outputs",
]

SCHEMA_VERSION = "1"
CSV_HEADER = (
    "K",
    "delta_r",
    "n_trials",
    "counts_total",
    "counts_coinc_atd",
    "counts_coinc_ard",
)


class IoError(Exception):
    """An output path could not be written."""


@dataclass(frozen=True)
class RunManifest:
    """What a run wrote and under which identity."""

    experiment_name: str
    config_hash: str
    master_seed: int
    artifact_version: str
    paths: tuple[str, ...]


def _fmt(value: float) -> str:
    return repr(float(value))


def scan_csv_text(scans: Sequence[tuple[float, FringeScan]]) -> str:
    """Render (offset, scan) pairs to CSV text with the fixed header."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for k_value, scan in scans:
        for p in scan.points:
            writer.writerow(
                (
                    _fmt(k_value),
                    _fmt(p.delta_r),
                    p.n_trials,
                    p.counts_total,
                    p.counts_coinc_atd,
                    p.counts_coinc_ard,
                )
            )
    return buf.getvalue()


def write_text(path: str | Path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None


def _sanitize(value: Any) -> Any:
    """Make the payload strict-JSON safe: non-finite floats become strings."""
    if isinstance(value, Mapping):
        return {str(k): _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def summary_payload(
    experiment: str,
    config_hash: str,
    master_seed: int,
    outputs: Sequence[str],
    results: Mapping[str, Any] | None,
    failure: Mapping[str, Any] | None = None,
) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "experiment": experiment,
        "config_hash": config_hash,
        "master_seed": master_seed,
        "outputs": list(outputs),
        "results": _sanitize(results) if results is not None else None,
        "failure": _sanitize(failure) if failure is not None else None,
    }
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def vis_dict(est: VisibilityEstimate | None) -> dict[str, Any] | None:
    if est is None:
        return None
    return {
        "v": float(est.value),
        "stderr": float(est.stderr),
        "offset": float(est.offset),
        "amplitude": float(est.amplitude),
        "phase": float(est.phase),
        "chi2": float(est.chi2),
        "dof": int(est.dof),
    }


def kink_fit_dict(fit: KinkFit) -> dict[str, Any]:
    return {
        "center": float(fit.center),
        "center_se": float(fit.center_se),
        "width": float(fit.width),
        "width_se": float(fit.width_se),
        "v_high": float(fit.v_high),
        "v_low": float(fit.v_low),
        "chi2": float(fit.chi2),
        "dof": int(fit.dof),
    }


def kink_curve_dict(curve: KinkCurve) -> dict[str, Any]:
    return {
        "k_values": [float(p.k_value) for p in curve.points],
        "visibility": [float(p.visibility) for p in curve.points],
        "stderr": [float(p.stderr) for p in curve.points],
    }


def _constant_offset(scan: FringeScan) -> list[tuple[float, FringeScan]]:
    return [(scan.path_diff, scan)]


def _kink_pairs(res: KinkExperimentResult) -> list[tuple[float, FringeScan]]:
    return list(zip(res.k_values, res.scans))


def whichway_outputs(
    result: WhichWayResult,
) -> tuple[dict[str, str], dict[str, Any]]:
    """(csv name -> text, summary results fragment) for the contrast pair."""
    csvs = {
        "whichway_removed.csv": scan_csv_text(_constant_offset(result.scan_removed)),
        "whichway_gated.csv": scan_csv_text(_constant_offset(result.scan_gated)),
    }
    results = {
        "visibility_alice_removed": vis_dict(result.vis_alice_removed),
        "visibility_alice_first_atd": vis_dict(result.vis_alice_first),
        "conditional_atd": _maybe_float(result.conditional_atd),
        "conditional_atd_by_point": [
            _maybe_float(v) for v in result.conditional_atd_by_point
        ],
    }
    return csvs, results


def _maybe_float(value: float | None) -> float | None:
    return None if value is None else float(value)


def kink_outputs(res: KinkExperimentResult) -> tuple[dict[str, str], dict[str, Any]]:
    csvs = {"kink_scan.csv": scan_csv_text(_kink_pairs(res))}
    results = {
        "channel": res.channel,
        "curve": kink_curve_dict(res.curve),
        "fit": kink_fit_dict(res.fit),
        "predicted_center": float(res.predicted_center),
        "predicted_width": float(res.predicted_width),
    }
    return csvs, results


def qispeed_outputs(res: QiSpeedResult) -> tuple[dict[str, str], dict[str, Any]]:
    csvs = {
        "qispeed_first.csv": scan_csv_text(_kink_pairs(res.kink_1)),
        "qispeed_second.csv": scan_csv_text(_kink_pairs(res.kink_2)),
    }
    results = {
        "d_1": float(res.d_1),
        "d_2": float(res.d_2),
        "fit_1": kink_fit_dict(res.fit_1),
        "fit_2": kink_fit_dict(res.fit_2),
        "delta_k": float(res.delta_k),
        "v_qi_single": _maybe_float(res.v_qi_single),
        "v_qi_single_se": _maybe_float(res.v_qi_single_se),
        "v_qi_diff": _maybe_float(res.v_qi_diff),
        "v_qi_diff_se": _maybe_float(res.v_qi_diff_se),
        "v_qi_min_bound": float(res.v_qi_min_bound),
        "speed_unit": "c_eff",
    }
    return csvs, results


def coherence_outputs(res: CoherenceResult) -> tuple[dict[str, str], dict[str, Any]]:
    csvs = {}
    if res.scan_open is not None:
        csvs["coherence_open.csv"] = scan_csv_text(_constant_offset(res.scan_open))
    if res.scan_blocked is not None:
        csvs["coherence_blocked.csv"] = scan_csv_text(
            _constant_offset(res.scan_blocked)
        )
    results = {
        "visibility_case_open": vis_dict(res.vis_case_open),
        "visibility_case_blocked": vis_dict(res.vis_case_blocked),
        "visibility_blocked_atd": vis_dict(res.vis_blocked_atd),
        "visibility_blocked_ard": vis_dict(res.vis_blocked_ard),
    }
    return csvs, results


def commutation_outputs(
    res: CommutationResult,
) -> tuple[dict[str, str], dict[str, Any]]:
    csvs = {}
    for channel, scans in res.scans.items():
        pairs = list(zip(res.k_values, scans))
        csvs[f"commutation_{channel}.csv"] = scan_csv_text(pairs)
    results = {
        "curves": {name: kink_curve_dict(c) for name, c in res.curves.items()},
        "amplitudes": {
            name: {"value": float(a.value), "stderr": float(a.stderr)}
            for name, a in res.amplitudes.items()
        },
        "tr_curves_consistent": bool(res.tr_curves_consistent),
        "sum_curve_consistent": bool(res.sum_curve_consistent),
        "kink_without_coincidence": bool(res.kink_without_coincidence),
        "stats": {k: float(v) for k, v in res.stats.items()},
        "predicted_center": float(res.predicted_center),
        "exclusion_halfwidth": float(res.exclusion_halfwidth),
    }
    return csvs, results


def write_run(
    out_dir: str | Path,
    experiment: str,
    config_hash: str,
    master_seed: int,
    csvs: Mapping[str, str],
    results: Mapping[str, Any] | None,
    failure: Mapping[str, Any] | None = None,
    extra_outputs: Iterable[str] = (),
) -> RunManifest:
    """Write CSVs plus the summary JSON; returns the manifest."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out}: {exc}") from None
    names = sorted(csvs)
    summary_name = f"{experiment}_summary.json"
    outputs = [*names, *extra_outputs, summary_name]
    for name in names:
        write_text(out / name, csvs[name])
    summary = summary_payload(
        experiment, config_hash, master_seed, outputs, results, failure
    )
    write_text(out / summary_name, summary)
    return RunManifest(
        experiment_name=experiment,
        config_hash=config_hash,
        master_seed=master_seed,
        artifact_version=SCHEMA_VERSION,
        paths=tuple(str(out / name) for name in outputs),
    )
