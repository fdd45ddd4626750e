"""End to end experiment drivers.

Each driver composes fringe scans into one published comparison: the remote
which way contrast pair, the visibility step against the path offset, the
influence speed estimates from two separations, the coherence conserving
detector placement test, and the channel consistency test with coincidence
gating on and off.  Drivers return raw scans alongside fitted numbers so
callers can serialize everything; boolean verdicts are conveniences.

Every driver salts its random streams so no two sub runs share trials even
under one master seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Sequence

from .fitting import (
    FitFailure,
    KinkCurve,
    KinkFit,
    KinkPoint,
    VisibilityEstimate,
    fit_kink,
    fit_visibility,
    kink_amplitude,
)
from .montecarlo import (
    AliceMode,
    ExperimentConfig,
    FringePoint,
    FringeScan,
    scan_fringes,
)
from .optics import InvalidGeometry
from .timing import Geometry, kink_center

__all__ = [
    "AdPosition",
    "CoherenceResult",
    "CommutationResult",
    "DegenerateGeometries",
    "KinkAmplitude",
    "KinkExperimentResult",
    "QiSpeedResult",
    "UnresolvedKink",
    "WhichWayResult",
    "exp_coherence_test",
    "exp_commutation",
    "exp_kink",
    "exp_qi_speed",
    "exp_remote_which_way",
    "kink_curve",
]

SALT_WHICHWAY_REMOVED = 1
SALT_WHICHWAY_GATED = 2
SALT_KINK = 3
SALT_QISPEED_FIRST = 4
SALT_QISPEED_SECOND = 5
SALT_COHERENCE_OPEN = 6
SALT_COHERENCE_BLOCKED = 7
SALT_COMMUTATION_T = 8
SALT_COMMUTATION_R = 9
SALT_COMMUTATION_RAW = 10

CHANNELS = ("total", "coinc_atd", "coinc_ard", "coinc_sum")

SIGNIFICANCE_SIGMA = 3.0
PLATEAU_EXCLUSION_WIDTHS = 2.5


class DegenerateGeometries(Exception):
    """The two geometries do not differ where the estimate needs them to."""


class UnresolvedKink(Exception):
    """A visibility step fit failed, so no threshold location exists."""


class AdPosition(Enum):
    """Placement of the extra detector in Alice's auxiliary interferometer."""

    OUT = "out"
    IN_ARM = "in_arm"


def _require_alice_first(cfg: ExperimentConfig) -> None:
    if cfg.geometry.path_diff <= 0:
        raise InvalidGeometry(
            "this protocol assumes the first measurement happens on the shorter "
            "path: path_s_to_b must exceed path_s_to_a"
        )


def channel_counts(point: FringePoint, channel: str) -> int:
    if channel == "total":
        return point.counts_total
    if channel == "coinc_atd":
        return point.counts_coinc_atd
    if channel == "coinc_ard":
        return point.counts_coinc_ard
    if channel == "coinc_sum":
        return point.counts_coinc_atd + point.counts_coinc_ard
    raise ValueError(f"unknown channel {channel!r}; expected one of {CHANNELS}")


def fit_scan(scan: FringeScan, channel: str) -> VisibilityEstimate:
    xs = [p.delta_r for p in scan.points]
    ys = [channel_counts(p, channel) for p in scan.points]
    ns = [p.n_trials for p in scan.points]
    return fit_visibility(xs, ys, scan.k, n_trials=ns)


def _auto_channel(cfg: ExperimentConfig) -> str:
    gated = cfg.coincidence.enabled and cfg.alice_mode not in (AliceMode.REMOVED,)
    return "coinc_sum" if gated else "total"


@dataclass(frozen=True)
class WhichWayResult:
    """Contrast with Alice absent versus gated on her transmitted port."""

    scan_removed: FringeScan
    scan_gated: FringeScan
    vis_alice_removed: VisibilityEstimate
    vis_alice_first: VisibilityEstimate
    conditional_atd: float | None
    conditional_atd_by_point: tuple[float | None, ...]


def exp_remote_which_way(cfg: ExperimentConfig) -> WhichWayResult:
    """Unconditional fringe scan, then the transmitted-port gated scan.

    The gated scan also reports Bob's click frequency per recorded
    transmitted-port event, pointwise and pooled: the number the conditional
    collapse rule pins at a quarter for balanced ideal optics.
    """
    _require_alice_first(cfg)
    removed = replace(cfg, alice_mode=AliceMode.REMOVED)
    scan_removed = scan_fringes(removed, stream=(SALT_WHICHWAY_REMOVED,))
    vis_removed = fit_scan(scan_removed, "total")

    gated = replace(cfg, alice_mode=AliceMode.BOTH)
    scan_gated = scan_fringes(gated, stream=(SALT_WHICHWAY_GATED,))
    vis_gated = fit_scan(scan_gated, "coinc_atd")

    by_point: list[float | None] = []
    for p in scan_gated.points:
        by_point.append(
            p.counts_coinc_atd / p.n_alice_atd if p.n_alice_atd > 0 else None
        )
    tot_atd = sum(p.n_alice_atd for p in scan_gated.points)
    tot_coinc = sum(p.counts_coinc_atd for p in scan_gated.points)
    pooled = tot_coinc / tot_atd if tot_atd > 0 else None
    return WhichWayResult(
        scan_removed=scan_removed,
        scan_gated=scan_gated,
        vis_alice_removed=vis_removed,
        vis_alice_first=vis_gated,
        conditional_atd=pooled,
        conditional_atd_by_point=tuple(by_point),
    )


def _geometry_at_offset(g: Geometry, k_value: float) -> Geometry:
    path_b = g.path_s_to_a + k_value
    if path_b <= 0:
        raise InvalidGeometry(
            f"path offset {k_value} m puts the second path at {path_b} m"
        )
    return replace(g, path_s_to_b=path_b)


def _kink_scans(
    cfg: ExperimentConfig,
    k_values: Sequence[float],
    stream_salt: int,
) -> tuple[FringeScan, ...]:
    scans = []
    for j, k_value in enumerate(k_values):
        cfg_j = replace(cfg, geometry=_geometry_at_offset(cfg.geometry, k_value))
        scans.append(scan_fringes(cfg_j, stream=(stream_salt, j)))
    return tuple(scans)


def _curve_from_scans(
    k_values: Sequence[float], scans: Sequence[FringeScan], channel: str
) -> KinkCurve:
    points = []
    for k_value, scan in zip(k_values, scans):
        est = fit_scan(scan, channel)
        points.append(KinkPoint(k_value=k_value, visibility=est.value, stderr=est.stderr))
    return KinkCurve(points=tuple(points))


def predicted_width(cfg: ExperimentConfig) -> float:
    """Transition width implied by independent arrival jitter on each photon."""
    return cfg.geometry.c_eff * cfg.noise.jitter_sigma * math.sqrt(2.0)


def kink_curve(
    cfg: ExperimentConfig,
    k_values: Sequence[float] | None = None,
    *,
    channel: str = "auto",
    stream_salt: int = SALT_KINK,
) -> KinkCurve:
    """Visibility at each path offset; the offset replaces path_s_to_b."""
    values = tuple(k_values) if k_values is not None else cfg.k_grid.values
    chan = _auto_channel(cfg) if channel == "auto" else channel
    scans = _kink_scans(cfg, values, stream_salt)
    return _curve_from_scans(values, scans, chan)


@dataclass(frozen=True)
class KinkExperimentResult:
    k_values: tuple[float, ...]
    scans: tuple[FringeScan, ...]
    curve: KinkCurve
    fit: KinkFit
    channel: str
    predicted_center: float
    predicted_width: float


def exp_kink(
    cfg: ExperimentConfig,
    *,
    channel: str = "auto",
    stream_salt: int = SALT_KINK,
) -> KinkExperimentResult:
    """Scan the path offset, fit the visibility step, keep the raw scans.

    Raises FitFailure("no_kink", flat_level=...) when the curve is flat:
    a legitimate physical outcome under the factorized model, distinct
    from a solver breakdown.
    """
    values = cfg.k_grid.values
    center = kink_center(cfg.geometry, cfg.collapse)
    # A transition at the grid edge leaves one plateau unsampled and the
    # step fit unconstrained there, so demand margin on both sides.
    margin = max(
        PLATEAU_EXCLUSION_WIDTHS * predicted_width(cfg), cfg.k_grid.spacing
    )
    if not values[0] + margin <= center <= values[-1] - margin:
        raise ValueError(
            f"path offset grid [{values[0]}, {values[-1]}] does not bracket the "
            f"predicted transition at {center} with plateau margin {margin}"
        )
    chan = _auto_channel(cfg) if channel == "auto" else channel
    scans = _kink_scans(cfg, values, stream_salt)
    curve = _curve_from_scans(values, scans, chan)
    fit = fit_kink(curve)
    return KinkExperimentResult(
        k_values=values,
        scans=scans,
        curve=curve,
        fit=fit,
        channel=chan,
        predicted_center=center,
        predicted_width=predicted_width(cfg),
    )


@dataclass(frozen=True)
class QiSpeedResult:
    """Influence speed estimates, in units of the propagation speed.

    Estimates that the fitted thresholds cannot support are None: the
    single geometry form needs a threshold resolved away from zero, the
    difference form needs the two thresholds resolved from each other.
    The lower bound is always defined and never exceeds the difference
    estimate when both exist.
    """

    d_1: float
    d_2: float
    fit_1: KinkFit
    fit_2: KinkFit
    kink_1: KinkExperimentResult
    kink_2: KinkExperimentResult
    delta_k: float
    v_qi_single: float | None
    v_qi_single_se: float | None
    v_qi_diff: float | None
    v_qi_diff_se: float | None
    v_qi_min_bound: float


def exp_qi_speed(
    cfg: ExperimentConfig, geometry_1: Geometry, geometry_2: Geometry
) -> QiSpeedResult:
    """Fit a visibility step per geometry, convert thresholds to speeds."""
    if geometry_1.dist_a_to_b == geometry_2.dist_a_to_b:
        raise DegenerateGeometries(
            "the two geometries share dist_a_to_b; parallel shift required"
        )
    for name in ("path_s_to_a", "path_s_to_b", "c_eff"):
        if getattr(geometry_1, name) != getattr(geometry_2, name):
            raise DegenerateGeometries(
                f"geometries must differ only in dist_a_to_b, but {name} differs"
            )

    results = []
    for geom, salt in (
        (geometry_1, SALT_QISPEED_FIRST),
        (geometry_2, SALT_QISPEED_SECOND),
    ):
        try:
            results.append(
                exp_kink(replace(cfg, geometry=geom), stream_salt=salt)
            )
        except FitFailure as exc:
            raise UnresolvedKink(
                f"step fit failed for dist_a_to_b={geom.dist_a_to_b}: {exc}"
            ) from exc
    kink_1, kink_2 = results
    fit_1, fit_2 = kink_1.fit, kink_2.fit
    d_1, d_2 = geometry_1.dist_a_to_b, geometry_2.dist_a_to_b

    k_1, se_1 = fit_1.center, fit_1.center_se
    k_2, se_2 = fit_2.center, fit_2.center_se
    delta_k = math.hypot(se_1, se_2)

    v_single = v_single_se = None
    if k_1 > SIGNIFICANCE_SIGMA * se_1:
        v_single = d_1 / k_1
        v_single_se = d_1 * se_1 / k_1**2

    v_diff = v_diff_se = None
    dk = k_1 - k_2
    if abs(dk) >= SIGNIFICANCE_SIGMA * delta_k and dk != 0.0:
        v_diff = (d_1 - d_2) / dk
        v_diff_se = abs(d_1 - d_2) * delta_k / dk**2

    v_min_bound = abs(d_1 - d_2) / (abs(dk) + delta_k)
    return QiSpeedResult(
        d_1=d_1,
        d_2=d_2,
        fit_1=fit_1,
        fit_2=fit_2,
        kink_1=kink_1,
        kink_2=kink_2,
        delta_k=delta_k,
        v_qi_single=v_single,
        v_qi_single_se=v_single_se,
        v_qi_diff=v_diff,
        v_qi_diff_se=v_diff_se,
        v_qi_min_bound=v_min_bound,
    )


@dataclass(frozen=True)
class CoherenceResult:
    """Fringe contrast with the arm blocker out versus in."""

    scan_open: FringeScan | None
    vis_case_open: VisibilityEstimate | None
    scan_blocked: FringeScan | None
    vis_case_blocked: VisibilityEstimate | None
    vis_blocked_atd: VisibilityEstimate | None
    vis_blocked_ard: VisibilityEstimate | None


def exp_coherence_test(
    cfg: ExperimentConfig, ad_position: AdPosition | None = None
) -> CoherenceResult:
    """Compare Bob's gated contrast for the two blocker placements.

    Blocker out: Alice detects only her recombined beam, which projects
    nothing, so Bob keeps full contrast.  Blocker in one arm: click and
    null alike settle the arm question, so under the conditional collapse
    rule Bob's gated contrast dies.  Passing ad_position runs one case.
    """
    _require_alice_first(cfg)
    run_open = ad_position in (None, AdPosition.OUT)
    run_blocked = ad_position in (None, AdPosition.IN_ARM)

    scan_open = vis_open = None
    if run_open:
        open_cfg = replace(cfg, alice_mode=AliceMode.MZ_OPEN)
        scan_open = scan_fringes(open_cfg, stream=(SALT_COHERENCE_OPEN,))
        vis_open = fit_scan(scan_open, "coinc_ard")

    scan_blocked = vis_blocked = vis_atd = vis_ard = None
    if run_blocked:
        blocked_cfg = replace(cfg, alice_mode=AliceMode.MZ_BLOCKED)
        scan_blocked = scan_fringes(blocked_cfg, stream=(SALT_COHERENCE_BLOCKED,))
        vis_blocked = fit_scan(scan_blocked, "coinc_sum")
        vis_atd = fit_scan(scan_blocked, "coinc_atd")
        vis_ard = fit_scan(scan_blocked, "coinc_ard")

    return CoherenceResult(
        scan_open=scan_open,
        vis_case_open=vis_open,
        scan_blocked=scan_blocked,
        vis_case_blocked=vis_blocked,
        vis_blocked_atd=vis_atd,
        vis_blocked_ard=vis_ard,
    )


@dataclass(frozen=True)
class KinkAmplitude:
    """Plateau drop across the predicted transition, clamped at zero."""

    value: float
    stderr: float


@dataclass(frozen=True)
class CommutationResult:
    """Four step curves and the consistency verdicts built from them.

    curves and scans are keyed by channel name: coinc_atd and coinc_ard
    come from separate gated runs, coinc_sum adds those two runs' counts
    point by point, total is an ungated run's raw counts.
    """

    k_values: tuple[float, ...]
    curves: Mapping[str, KinkCurve]
    scans: Mapping[str, tuple[FringeScan, ...]]
    amplitudes: Mapping[str, KinkAmplitude]
    tr_curves_consistent: bool
    sum_curve_consistent: bool
    kink_without_coincidence: bool
    stats: Mapping[str, float]
    predicted_center: float
    exclusion_halfwidth: float


def _pointwise_max_sigma(a: KinkCurve, b: KinkCurve) -> float:
    worst = 0.0
    for pa, pb in zip(a.points, b.points):
        err = math.hypot(pa.stderr, pb.stderr)
        diff = abs(pa.visibility - pb.visibility)
        if err == 0.0:
            if diff > 0.0:
                return math.inf
            continue
        worst = max(worst, diff / err)
    return worst


def _summed_scans(
    scans_t: Sequence[FringeScan], scans_r: Sequence[FringeScan]
) -> tuple[FringeScan, ...]:
    summed = []
    for st, sr in zip(scans_t, scans_r):
        points = []
        for pt, pr in zip(st.points, sr.points):
            merged = FringePoint(
                delta_r=pt.delta_r,
                n_trials=pt.n_trials + pr.n_trials,
                counts_total=pt.counts_total + pr.counts_total,
                counts_coinc_atd=pt.counts_coinc_atd,
                counts_coinc_ard=pr.counts_coinc_ard,
                n_alice_atd=pt.n_alice_atd,
                n_alice_ard=pr.n_alice_ard,
            )
            assert (
                merged.counts_coinc_atd + merged.counts_coinc_ard
                == pt.counts_coinc_atd + pr.counts_coinc_ard
            )
            points.append(merged)
        summed.append(FringeScan(points=tuple(points), k=st.k, path_diff=st.path_diff))
    return tuple(summed)


def exp_commutation(cfg: ExperimentConfig) -> CommutationResult:
    """Gated per port, gated sum, and ungated step curves, plus verdicts.

    The port curves come from separate full runs so the summed curve can
    be formed the way hardware would: by adding the two runs' counts at
    each grid cell before any fitting.  Verdicts: the two port curves
    agree pointwise, the summed curve agrees with each port curve
    pointwise, and the step survives with the gate off (ungated amplitude
    significant, and smaller than the gated one), all at three standard
    errors.
    """
    values = cfg.k_grid.values
    both = replace(cfg, alice_mode=AliceMode.BOTH)
    scans_t = _kink_scans(both, values, SALT_COMMUTATION_T)
    scans_r = _kink_scans(both, values, SALT_COMMUTATION_R)
    raw_cfg = replace(both, coincidence=replace(cfg.coincidence, enabled=False))
    scans_raw = _kink_scans(raw_cfg, values, SALT_COMMUTATION_RAW)
    scans_sum = _summed_scans(scans_t, scans_r)

    curves = {
        "coinc_atd": _curve_from_scans(values, scans_t, "coinc_atd"),
        "coinc_ard": _curve_from_scans(values, scans_r, "coinc_ard"),
        "coinc_sum": _curve_from_scans(values, scans_sum, "coinc_sum"),
        "total": _curve_from_scans(values, scans_raw, "total"),
    }
    scans = {
        "coinc_atd": scans_t,
        "coinc_ard": scans_r,
        "coinc_sum": scans_sum,
        "total": scans_raw,
    }

    center = kink_center(cfg.geometry, cfg.collapse)
    spacing = min(b - a for a, b in zip(values, values[1:]))
    halfwidth = max(PLATEAU_EXCLUSION_WIDTHS * predicted_width(cfg), 1.5 * spacing)

    amplitudes = {}
    for name, curve in curves.items():
        amp, err = kink_amplitude(curve, center, halfwidth)
        amplitudes[name] = KinkAmplitude(value=max(amp, 0.0), stderr=err)

    tr_sigma = _pointwise_max_sigma(curves["coinc_atd"], curves["coinc_ard"])
    sum_sigma = max(
        _pointwise_max_sigma(curves["coinc_sum"], curves["coinc_atd"]),
        _pointwise_max_sigma(curves["coinc_sum"], curves["coinc_ard"]),
    )
    amp_on = amplitudes["coinc_sum"]
    amp_off = amplitudes["total"]
    gap = amp_on.value - amp_off.value
    gap_err = math.hypot(amp_on.stderr, amp_off.stderr)
    off_sig = amp_off.value / amp_off.stderr if amp_off.stderr > 0 else math.inf
    gap_sig = gap / gap_err if gap_err > 0 else math.inf

    stats = {
        "tr_max_sigma": tr_sigma,
        "sum_max_sigma": sum_sigma,
        "amp_on": amp_on.value,
        "amp_on_se": amp_on.stderr,
        "amp_off": amp_off.value,
        "amp_off_se": amp_off.stderr,
        "gap_sigma": gap_sig,
        "off_sigma": off_sig,
    }
    return CommutationResult(
        k_values=values,
        curves=curves,
        scans=scans,
        amplitudes=amplitudes,
        tr_curves_consistent=tr_sigma <= SIGNIFICANCE_SIGMA,
        sum_curve_consistent=sum_sigma <= SIGNIFICANCE_SIGMA,
        kink_without_coincidence=(
            off_sig > SIGNIFICANCE_SIGMA and gap_sig > SIGNIFICANCE_SIGMA
        ),
        stats=stats,
        predicted_center=center,
        exclusion_halfwidth=halfwidth,
    )
