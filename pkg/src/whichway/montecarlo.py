"""Seeded Monte Carlo trial engine and fringe scans.

A trial is one emission window: with probability 1/(1+epsilon) the source
fires a correlated pair, otherwise an uncorrelated single reaches Bob.
Alice's side is resolved first (branch, projection, click recording), then
the timing rule decides whether her projection reached Bob before his
detection, and Bob's click is drawn from the matching closed form
probability in :mod:`whichway.optics`.  Coincidences pair clicks whose time
difference fits inside the window.

Determinism: randomness comes from counter based Philox streams keyed by
``SeedSequence((master_seed, *stream_path, chunk_index))``.  Trials are
drawn in fixed chunks of :data:`CHUNK_TRIALS` with a fixed column layout
that every trial consumes whether or not a value ends up used, so
aggregates are bit identical for any worker count and any execution order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import optics
from .hilbert import Pol
from .optics import (
    AliceDetector,
    BeamSplitterSpec,
    InterferometerSpec,
    SourceSpec,
    StateModel,
)
from .timing import CollapseSpec, Geometry

__all__ = [
    "AliceMode",
    "BatchCounts",
    "CHUNK_TRIALS",
    "CoincidenceSpec",
    "ExperimentConfig",
    "FringePoint",
    "FringeScan",
    "GridSpec",
    "GridTooCoarse",
    "NoiseSpec",
    "TrialOrigin",
    "TrialOutcome",
    "analytic_rates",
    "run_batch",
    "run_trial",
    "scan_fringes",
]

CHUNK_TRIALS = 8192
MIN_SCAN_POINTS = 8


class GridTooCoarse(Exception):
    """Scan grid too short or too sparse to constrain a fringe."""


class AliceMode(Enum):
    """Which of Alice's detectors participate in a run.

    REMOVED takes Alice out entirely (no projection ever).  ATD_ONLY and
    ARD_ONLY leave one port watched; a photon exiting the unwatched port
    escapes unmeasured.  MZ_OPEN and MZ_BLOCKED model her auxiliary
    interferometer for the coherence test: open means she detects the
    recombined beam (no projection), blocked means a detector sits in one
    arm and induces the which way choice on click and on null alike.
    """

    REMOVED = "removed"
    BOTH = "both"
    ATD_ONLY = "atd_only"
    ARD_ONLY = "ard_only"
    MZ_OPEN = "mz_open"
    MZ_BLOCKED = "mz_blocked"


class TrialOrigin(Enum):
    SIGNAL_PAIR = "signal_pair"
    NOISE_SINGLE = "noise_single"
    DARK = "dark"


@dataclass(frozen=True)
class NoiseSpec:
    """Backgrounds: uncorrelated singles, detector losses, dark counts, jitter.

    epsilon is the ratio of uncorrelated singles to pairs; such singles
    traverse Bob's interferometer coherently and fringe with visibility
    noise_fringe_visibility.  dark_rate is the expected dark count per trial
    window at Bob's fringe detector.  jitter_sigma (seconds) smears each
    photon's arrival time independently.
    """

    epsilon: float = 0.0
    noise_fringe_visibility: float = 1.0
    detector_efficiency: float = 1.0
    dark_rate: float = 0.0
    jitter_sigma: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.epsilon) or self.epsilon < 0:
            raise ValueError("epsilon must be a nonnegative real")
        if not 0.0 <= self.noise_fringe_visibility <= 1.0:
            raise ValueError("noise_fringe_visibility must lie in [0, 1]")
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise ValueError("detector_efficiency must lie in (0, 1]")
        if not math.isfinite(self.dark_rate) or self.dark_rate < 0:
            raise ValueError("dark_rate must be a nonnegative real")
        if not math.isfinite(self.jitter_sigma) or self.jitter_sigma < 0:
            raise ValueError("jitter_sigma must be a nonnegative real")


@dataclass(frozen=True)
class CoincidenceSpec:
    window: float = 2.0e-7
    enabled: bool = True

    def __post_init__(self) -> None:
        if not math.isfinite(self.window) or self.window <= 0:
            raise ValueError("window must be a positive time in seconds")


@dataclass(frozen=True)
class GridSpec:
    """Inclusive linspace grid: n evenly spaced values from start to stop."""

    start: float
    stop: float
    n: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ValueError("grid endpoints must be finite")
        if self.n < 2:
            raise ValueError("grid needs at least 2 points")
        if self.stop <= self.start:
            raise ValueError("grid stop must exceed start")

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(float(v) for v in np.linspace(self.start, self.stop, self.n))

    @property
    def span(self) -> float:
        return self.stop - self.start

    @property
    def spacing(self) -> float:
        return self.span / (self.n - 1)


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one simulated run."""

    source: SourceSpec
    model: StateModel
    bs_a: BeamSplitterSpec
    bs_b: BeamSplitterSpec
    interferometer: InterferometerSpec
    geometry: Geometry
    collapse: CollapseSpec
    noise: NoiseSpec
    coincidence: CoincidenceSpec
    trials_per_point: int
    delta_r_grid: GridSpec
    k_grid: GridSpec
    master_seed: int
    workers: int = 1
    alice_mode: AliceMode = AliceMode.BOTH

    def __post_init__(self) -> None:
        if self.trials_per_point < 100:
            raise ValueError("trials_per_point must be at least 100")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass(frozen=True)
class TrialOutcome:
    """One trial: optional clicks with times, origin, and the timing flag."""

    alice_click: tuple[AliceDetector, float] | None
    bob_click: float | None
    origin: TrialOrigin
    decohered_at_bob: bool


@dataclass(frozen=True)
class BatchCounts:
    """Additive detection tallies for a batch of trials."""

    n_trials: int = 0
    n_alice_atd: int = 0
    n_alice_ard: int = 0
    n_bob: int = 0
    n_coinc_atd: int = 0
    n_coinc_ard: int = 0
    n_signal: int = 0
    n_noise: int = 0
    n_dark: int = 0

    def __add__(self, other: "BatchCounts") -> "BatchCounts":
        return BatchCounts(
            *(getattr(self, f) + getattr(other, f) for f in self.__dataclass_fields__)
        )


@dataclass(frozen=True)
class FringePoint:
    """Counts at one interferometer displacement."""

    delta_r: float
    n_trials: int
    counts_total: int
    counts_coinc_atd: int
    counts_coinc_ard: int
    n_alice_atd: int = 0
    n_alice_ard: int = 0


@dataclass(frozen=True)
class FringeScan:
    """Counts across a delta_r grid, plus the constants a fit needs."""

    points: tuple[FringePoint, ...]
    k: float
    path_diff: float


def _rng(*entropy: int) -> np.random.Generator:
    seq = np.random.SeedSequence(tuple(int(e) for e in entropy))
    return np.random.Generator(np.random.Philox(seq))


_NO_DETECTOR = -1
_DET_CODE = {AliceDetector.ATD: 0, AliceDetector.ARD: 1}


@dataclass(frozen=True)
class _BranchSpec:
    """One Alice side branch: weight, projection flag, click channel."""

    weight: float
    projects: bool
    outcome: Pol | None
    detector: AliceDetector | None
    record_prob: float


@dataclass(frozen=True)
class _TrialModel:
    """Per (config, delta_r) scalar probability table consumed by trials."""

    p_signal: float
    branches: tuple[_BranchSpec, _BranchSpec, _BranchSpec]  # H, V, unmeasured
    p_cond_h: float
    p_cond_v: float
    p_default: float
    timing_gated: bool
    p_noise_click: float
    eff_bob: float
    p_dark: float
    tau_a: float
    tau_b: float
    delay: float
    infinite: bool
    sigma: float
    window: float
    coinc_enabled: bool


def _alice_branches(cfg: ExperimentConfig, p_h: float) -> tuple[_BranchSpec, ...]:
    eff = cfg.noise.detector_efficiency
    mode = cfg.alice_mode
    h = _BranchSpec(0.0, False, None, None, 0.0)
    v = _BranchSpec(0.0, False, None, None, 0.0)
    un = _BranchSpec(1.0, False, None, None, 0.0)
    if mode is AliceMode.BOTH:
        h = _BranchSpec(p_h, True, Pol.H, AliceDetector.ATD, eff)
        v = _BranchSpec(1.0 - p_h, True, Pol.V, AliceDetector.ARD, eff)
        un = _BranchSpec(0.0, False, None, None, 0.0)
    elif mode is AliceMode.ATD_ONLY:
        h = _BranchSpec(p_h, True, Pol.H, AliceDetector.ATD, eff)
        un = _BranchSpec(1.0 - p_h, False, None, None, 0.0)
    elif mode is AliceMode.ARD_ONLY:
        v = _BranchSpec(1.0 - p_h, True, Pol.V, AliceDetector.ARD, eff)
        un = _BranchSpec(p_h, False, None, None, 0.0)
    elif mode is AliceMode.MZ_BLOCKED:
        # Blocker in the transmitted arm: a click projects onto H; a null
        # projects onto V and the photon may still fire her recombined beam
        # detector (one output port of two).
        h = _BranchSpec(p_h, True, Pol.H, AliceDetector.ATD, eff)
        v = _BranchSpec(1.0 - p_h, True, Pol.V, AliceDetector.ARD, 0.5 * eff)
        un = _BranchSpec(0.0, False, None, None, 0.0)
    elif mode is AliceMode.MZ_OPEN:
        un = _BranchSpec(1.0, False, None, AliceDetector.ARD, 0.5 * eff)
    return (h, v, un)


def _build_model(cfg: ExperimentConfig) -> _TrialModel:
    src, model = cfg.source, cfg.model
    ifm = cfg.interferometer
    joint = optics.split_joint_state(src, cfg.bs_a, cfg.bs_b, model)
    p_h = optics.alice_transmit_probability(joint)
    branches = _alice_branches(cfg, p_h)

    p_cond_h = optics.bob_click_probability(
        src, model, cfg.bs_a, cfg.bs_b, ifm, Pol.H, True
    )
    p_cond_v = optics.bob_click_probability(
        src, model, cfg.bs_a, cfg.bs_b, ifm, Pol.V, True
    )
    p_default = optics.bob_click_probability(
        src, model, cfg.bs_a, cfg.bs_b, ifm, None, False
    )

    noise_bracket = 1.0 + cfg.noise.noise_fringe_visibility * math.cos(ifm.theta)
    p_noise_click = ifm.zeta + ifm.eta * noise_bracket

    g = cfg.geometry
    return _TrialModel(
        p_signal=1.0 / (1.0 + cfg.noise.epsilon),
        branches=branches,
        p_cond_h=p_cond_h,
        p_cond_v=p_cond_v,
        p_default=p_default,
        timing_gated=model is StateModel.REDUCED_BELL,
        p_noise_click=p_noise_click,
        eff_bob=cfg.noise.detector_efficiency,
        p_dark=-math.expm1(-cfg.noise.dark_rate),
        tau_a=g.path_s_to_a / g.c_eff,
        tau_b=g.path_s_to_b / g.c_eff,
        delay=cfg.collapse.delay(g.dist_a_to_b, g.c_eff),
        infinite=cfg.collapse.is_infinite,
        sigma=cfg.noise.jitter_sigma,
        window=cfg.coincidence.window,
        coinc_enabled=cfg.coincidence.enabled,
    )


def _draw(m: _TrialModel, rng: np.random.Generator, n: int) -> dict[str, np.ndarray]:
    # Fixed column layout; every trial consumes every column so that chunk
    # contents depend only on (seed path, chunk index), never on outcomes.
    u_cat = rng.random(n)
    jit_a = rng.standard_normal(n) * m.sigma
    jit_b = rng.standard_normal(n) * m.sigma
    u_branch = rng.random(n)
    u_rec = rng.random(n)
    u_bob = rng.random(n)
    u_beff = rng.random(n)
    u_dark = rng.random(n)
    u_dtime = rng.random(n)

    is_sig = u_cat < m.p_signal
    t_a = np.maximum(0.0, m.tau_a + jit_a)
    t_b = np.maximum(0.0, m.tau_b + jit_b)

    br_h, br_v, br_un = m.branches
    in_h = is_sig & (u_branch < br_h.weight)
    in_v = is_sig & ~in_h & (u_branch < br_h.weight + br_v.weight)
    in_un = is_sig & ~in_h & ~in_v

    projected = (in_h & br_h.projects) | (in_v & br_v.projects)
    timing_ok = (t_a < t_b) if m.infinite else (t_a + m.delay <= t_b)
    decohered = projected & timing_ok
    conditioned = projected & (decohered if m.timing_gated else True)

    p_bob = np.where(
        is_sig,
        np.where(
            conditioned,
            np.where(in_h, m.p_cond_h, m.p_cond_v),
            m.p_default,
        ),
        m.p_noise_click,
    )
    bob_hit = (u_bob < p_bob) & (u_beff < m.eff_bob)
    dark_hit = u_dark < m.p_dark
    # A photon click owns the window; the dark draw only supplies a time
    # when no photon fired.  Dark times land uniformly within two windows
    # of the nominal arrival.
    t_dark = m.tau_b + (2.0 * u_dtime - 1.0) * (2.0 * m.window)
    t_bob = np.where(bob_hit, t_b, t_dark)
    bob_any = bob_hit | dark_hit

    rec_h = in_h & (u_rec < br_h.record_prob)
    rec_v = in_v & (u_rec < br_v.record_prob)
    rec_un = in_un & (u_rec < br_un.record_prob)

    det = np.full(n, _NO_DETECTOR, dtype=np.int8)
    for mask, spec in ((rec_h, br_h), (rec_v, br_v), (rec_un, br_un)):
        if spec.detector is not None:
            det[mask] = _DET_CODE[spec.detector]
    alice_rec = det != _NO_DETECTOR

    in_window = np.abs(t_bob - t_a) <= m.window
    coinc = alice_rec & bob_any & in_window if m.coinc_enabled else np.zeros(n, bool)

    return {
        "is_sig": is_sig,
        "decohered": decohered,
        "alice_det": det,
        "t_a": t_a,
        "bob_any": bob_any,
        "bob_hit": bob_hit,
        "dark_hit": dark_hit,
        "t_bob": t_bob,
        "coinc": coinc,
    }


def _tally(arrays: dict[str, np.ndarray]) -> BatchCounts:
    det = arrays["alice_det"]
    atd = det == _DET_CODE[AliceDetector.ATD]
    ard = det == _DET_CODE[AliceDetector.ARD]
    coinc = arrays["coinc"]
    dark_origin = arrays["dark_hit"] & ~arrays["bob_hit"] & (det == _NO_DETECTOR)
    return BatchCounts(
        n_trials=int(det.size),
        n_alice_atd=int(atd.sum()),
        n_alice_ard=int(ard.sum()),
        n_bob=int(arrays["bob_any"].sum()),
        n_coinc_atd=int((coinc & atd).sum()),
        n_coinc_ard=int((coinc & ard).sum()),
        n_signal=int(arrays["is_sig"].sum()),
        n_noise=int((~arrays["is_sig"]).sum()),
        n_dark=int(dark_origin.sum()),
    )


def run_trial(cfg: ExperimentConfig, trial_seed: int) -> TrialOutcome:
    """Simulate a single trial from its own seed."""
    model = _build_model(cfg)
    arrays = _draw(model, _rng(trial_seed), 1)
    det_code = int(arrays["alice_det"][0])
    alice_click = None
    if det_code != _NO_DETECTOR:
        detector = AliceDetector.ATD if det_code == 0 else AliceDetector.ARD
        alice_click = (detector, float(arrays["t_a"][0]))
    bob_click = float(arrays["t_bob"][0]) if arrays["bob_any"][0] else None
    if arrays["dark_hit"][0] and not arrays["bob_hit"][0] and alice_click is None:
        origin = TrialOrigin.DARK
    elif arrays["is_sig"][0]:
        origin = TrialOrigin.SIGNAL_PAIR
    else:
        origin = TrialOrigin.NOISE_SINGLE
    return TrialOutcome(
        alice_click=alice_click,
        bob_click=bob_click,
        origin=origin,
        decohered_at_bob=bool(arrays["decohered"][0]),
    )


def run_batch(
    cfg: ExperimentConfig,
    master_seed: int,
    n_trials: int,
    *,
    stream: tuple[int, ...] = (),
    workers: int = 1,
) -> BatchCounts:
    """Aggregate counts over n_trials; identical for any worker count.

    Chunk boundaries and per chunk streams are fixed by (master_seed,
    stream, chunk index) alone, and merging is a commutative sum.
    """
    if n_trials < 0:
        raise ValueError("n_trials must be nonnegative")
    model = _build_model(cfg)
    sizes = [CHUNK_TRIALS] * (n_trials // CHUNK_TRIALS)
    if n_trials % CHUNK_TRIALS:
        sizes.append(n_trials % CHUNK_TRIALS)

    def one(chunk_index: int) -> BatchCounts:
        rng = _rng(master_seed, *stream, chunk_index)
        return _tally(_draw(model, rng, sizes[chunk_index]))

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    else:
        parts = [one(i) for i in range(len(sizes))]
    total = BatchCounts()
    for part in parts:
        total = total + part
    return total


def _scan_grid(values: tuple[float, ...], k: float) -> np.ndarray:
    grid = np.asarray(values, dtype=float)
    if grid.size < MIN_SCAN_POINTS:
        raise GridTooCoarse(
            f"fringe grid needs at least {MIN_SCAN_POINTS} points, got {grid.size}"
        )
    span = float(grid.max() - grid.min())
    if k * span < 2.0 * math.pi * (1.0 - 1e-9):
        raise GridTooCoarse(
            f"fringe grid spans {k * span:.3g} rad of phase, needs at least 2*pi"
        )
    return grid


def scan_fringes(
    cfg: ExperimentConfig,
    delta_r_grid: tuple[float, ...] | None = None,
    *,
    stream: tuple[int, ...] = (),
) -> FringeScan:
    """Fresh trials at every grid displacement; one batch per point."""
    values = delta_r_grid if delta_r_grid is not None else cfg.delta_r_grid.values
    grid = _scan_grid(tuple(values), cfg.interferometer.k)

    def point(i: int) -> FringePoint:
        cfg_i = replace(
            cfg, interferometer=replace(cfg.interferometer, delta_r=float(grid[i]))
        )
        counts = run_batch(
            cfg_i, cfg.master_seed, cfg.trials_per_point, stream=(*stream, i)
        )
        return FringePoint(
            delta_r=float(grid[i]),
            n_trials=counts.n_trials,
            counts_total=counts.n_bob,
            counts_coinc_atd=counts.n_coinc_atd,
            counts_coinc_ard=counts.n_coinc_ard,
            n_alice_atd=counts.n_alice_atd,
            n_alice_ard=counts.n_alice_ard,
        )

    indices = range(grid.size)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            points = tuple(pool.map(point, indices))
    else:
        points = tuple(point(i) for i in indices)
    return FringeScan(
        points=points, k=cfg.interferometer.k, path_diff=cfg.geometry.path_diff
    )


def _normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def analytic_rates(cfg: ExperimentConfig) -> dict[str, float]:
    """Closed form per trial click frequencies implied by the config.

    Composes the optics probabilities with the branch weights, the timing
    rule (jitter folded in through the normal CDF) and detector efficiency.
    Assumes the coincidence window swallows the arrival time spread; raises
    ValueError when it provably cannot.
    """
    m = _build_model(cfg)
    mu = m.tau_b - m.tau_a
    if m.coinc_enabled and abs(mu) + 6.0 * m.sigma * math.sqrt(2.0) > m.window:
        raise ValueError(
            "coincidence window does not cover the arrival time spread; "
            "closed form coincidence rates would be biased"
        )
    threshold = m.delay if not m.infinite else 0.0
    if m.sigma > 0:
        p_dec = 1.0 - _normal_cdf((threshold - mu) / (m.sigma * math.sqrt(2.0)))
        p_in = _normal_cdf((m.window - mu) / (m.sigma * math.sqrt(2.0)))
        p_in -= _normal_cdf((-m.window - mu) / (m.sigma * math.sqrt(2.0)))
    else:
        p_dec = 1.0 if (mu > threshold or (not m.infinite and mu == threshold)) else 0.0
        p_in = 1.0 if abs(mu) <= m.window else 0.0
    # Dark times are uniform over four windows centred on the nominal
    # arrival, so half of them land inside the gate once the gate covers
    # the spread checked above.
    p_dark_in = 0.5

    br_h, br_v, br_un = m.branches
    rates = {"signal_fraction": m.p_signal}
    p_bob_signal = 0.0
    coinc = {AliceDetector.ATD: 0.0, AliceDetector.ARD: 0.0}
    alice = {AliceDetector.ATD: 0.0, AliceDetector.ARD: 0.0}
    for spec, p_cond in ((br_h, m.p_cond_h), (br_v, m.p_cond_v), (br_un, None)):
        if spec.weight == 0.0:
            continue
        if spec.projects:
            mix = p_dec if m.timing_gated else 1.0
            p_click = mix * p_cond + (1.0 - mix) * m.p_default
        else:
            p_click = m.p_default
        p_bob_signal += spec.weight * p_click * m.eff_bob
        if spec.detector is not None:
            p_hit = p_click * m.eff_bob
            alice[spec.detector] += spec.weight * spec.record_prob
            coinc[spec.detector] += spec.weight * spec.record_prob * (
                p_hit * p_in + (1.0 - p_hit) * m.p_dark * p_dark_in
            )
    p_noise = 1.0 - m.p_signal
    rates["alice_atd"] = m.p_signal * alice[AliceDetector.ATD]
    rates["alice_ard"] = m.p_signal * alice[AliceDetector.ARD]
    p_photon = m.p_signal * p_bob_signal + p_noise * m.p_noise_click * m.eff_bob
    rates["bob"] = p_photon + (1.0 - p_photon) * m.p_dark
    if m.coinc_enabled:
        rates["coinc_atd"] = m.p_signal * coinc[AliceDetector.ATD]
        rates["coinc_ard"] = m.p_signal * coinc[AliceDetector.ARD]
    else:
        rates["coinc_atd"] = 0.0
        rates["coinc_ard"] = 0.0
    return rates
