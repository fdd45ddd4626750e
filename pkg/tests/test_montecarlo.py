import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import at_theta, make_config
from whichway.montecarlo import (
    AliceMode,
    BatchCounts,
    CoincidenceSpec,
    GridSpec,
    GridTooCoarse,
    NoiseSpec,
    TrialOrigin,
    analytic_rates,
    run_batch,
    run_trial,
    scan_fringes,
)
from whichway.optics import SourceSpec, SourceType
from whichway.timing import CollapseSpec, Geometry


def binom_sd(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 1e-12) / n)


def test_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(epsilon=-0.1)
    with pytest.raises(ValueError):
        NoiseSpec(detector_efficiency=0.0)
    with pytest.raises(ValueError):
        NoiseSpec(noise_fringe_visibility=1.5)
    with pytest.raises(ValueError):
        CoincidenceSpec(window=0.0)
    with pytest.raises(ValueError):
        GridSpec(0.0, 1.0, 1)
    with pytest.raises(ValueError):
        make_config(trials_per_point=99)
    with pytest.raises(ValueError):
        make_config(master_seed=-1)
    with pytest.raises(ValueError):
        make_config(workers=0)


def test_grid_values_inclusive_endpoints():
    grid = GridSpec(-3.0, 3.0, 7)
    vals = grid.values
    assert len(vals) == 7
    assert vals[0] == -3.0 and vals[-1] == 3.0
    assert grid.spacing == pytest.approx(1.0)
    assert grid.span == pytest.approx(6.0)


def test_run_batch_is_deterministic_in_seed_and_stream():
    cfg = make_config()
    a = run_batch(cfg, 42, 5000)
    b = run_batch(cfg, 42, 5000)
    assert a == b
    c = run_batch(cfg, 43, 5000)
    assert a != c
    d = run_batch(cfg, 42, 5000, stream=(9,))
    assert a != d


def test_worker_count_does_not_change_counts():
    cfg = make_config(trials_per_point=30000)
    base = run_batch(cfg, 7, 30000, workers=1)
    for workers in (2, 4, 8):
        assert run_batch(cfg, 7, 30000, workers=workers) == base


def test_batch_counts_merge_is_fieldwise():
    a = BatchCounts(10, 1, 2, 3, 1, 1, 9, 1, 0)
    b = BatchCounts(5, 0, 1, 2, 0, 1, 5, 0, 0)
    s = a + b
    assert s.n_trials == 15 and s.n_bob == 5 and s.n_coinc_ard == 2


def test_dark_fringe_minimum_is_exactly_empty():
    # ideal optics at the fringe minimum: click probability is exactly zero
    cfg = at_theta(make_config(alice_mode=AliceMode.REMOVED), math.pi)
    counts = run_batch(cfg, 3, 4000)
    assert counts.n_bob == 0
    assert counts.n_alice_atd == 0 and counts.n_alice_ard == 0


def test_run_trial_fields_make_sense():
    cfg = make_config()
    seen_click = seen_none = False
    for seed in range(200):
        out = run_trial(cfg, seed)
        assert out.origin is TrialOrigin.SIGNAL_PAIR
        assert out.decohered_at_bob  # alice-first geometry, no jitter
        assert out.alice_click is not None
        det, t_a = out.alice_click
        assert t_a == pytest.approx(1.0e-7)
        if out.bob_click is not None:
            assert out.bob_click == pytest.approx(1.1e-7)
            seen_click = True
        else:
            seen_none = True
    assert seen_click and seen_none


def test_conditional_rate_quarter_at_any_phase():
    for theta in (0.0, 1.1, math.pi / 2):
        cfg = at_theta(make_config(trials_per_point=40000), theta)
        counts = run_batch(cfg, 1, 40000)
        cond = counts.n_coinc_atd / counts.n_alice_atd
        assert abs(cond - 0.25) < 5 * binom_sd(0.25, counts.n_alice_atd)


def test_noise_fraction_and_origin_accounting():
    cfg = make_config(noise=NoiseSpec(epsilon=0.25), trials_per_point=40000)
    counts = run_batch(cfg, 2, 40000)
    assert counts.n_signal + counts.n_noise + counts.n_dark == counts.n_trials
    frac = counts.n_noise / counts.n_trials
    assert abs(frac - 0.2) < 5 * binom_sd(0.2, counts.n_trials)


def test_coincidences_never_exceed_member_counts():
    rng = np.random.default_rng(17)
    for _ in range(10):
        cfg = make_config(
            noise=NoiseSpec(
                epsilon=float(rng.uniform(0, 0.3)),
                detector_efficiency=float(rng.uniform(0.3, 1.0)),
                dark_rate=float(rng.uniform(0, 2e5)),
                jitter_sigma=float(rng.uniform(0, 2e-9)),
            ),
            trials_per_point=4000,
            master_seed=int(rng.integers(0, 1000)),
        )
        c = run_batch(cfg, cfg.master_seed, 4000)
        assert c.n_coinc_atd + c.n_coinc_ard <= c.n_bob
        assert c.n_coinc_atd <= c.n_alice_atd
        assert c.n_coinc_ard <= c.n_alice_ard
        assert c.n_bob <= c.n_trials


def test_ideal_gated_counts_saturate_bob_counts():
    # perfect detection and a wide window: every Bob click coincides
    cfg = at_theta(make_config(), 0.7)
    c = run_batch(cfg, 4, 8000)
    assert c.n_coinc_atd + c.n_coinc_ard == c.n_bob
    assert c.n_alice_atd + c.n_alice_ard == c.n_trials


def test_alice_mode_single_port_gating():
    cfg = make_config(alice_mode=AliceMode.ATD_ONLY, trials_per_point=8000)
    c = run_batch(cfg, 5, 8000)
    assert c.n_alice_ard == 0 and c.n_coinc_ard == 0
    assert c.n_alice_atd > 0
    cfg = make_config(alice_mode=AliceMode.ARD_ONLY, trials_per_point=8000)
    c = run_batch(cfg, 5, 8000)
    assert c.n_alice_atd == 0 and c.n_coinc_atd == 0


def test_detector_efficiency_thins_alice_records():
    cfg = make_config(noise=NoiseSpec(detector_efficiency=0.4), trials_per_point=40000)
    c = run_batch(cfg, 6, 40000)
    frac = (c.n_alice_atd + c.n_alice_ard) / c.n_trials
    assert abs(frac - 0.4) < 5 * binom_sd(0.4, c.n_trials)
    # conditioning happens for unrecorded trials too, so Bob sees the
    # collapsed 1/4 thinned by his own detector efficiency
    cond_all = c.n_bob / c.n_trials
    assert abs(cond_all - 0.1) < 5 * binom_sd(0.1, c.n_trials)


def test_scan_requires_enough_points_and_phase_coverage():
    with pytest.raises(GridTooCoarse):
        scan_fringes(make_config(delta_r_grid=GridSpec(0.0, 1.0e-6, 7)))
    # 8 points but a span far below one fringe period
    with pytest.raises(GridTooCoarse):
        scan_fringes(make_config(delta_r_grid=GridSpec(0.0, 1.0e-8, 8)))


def test_scan_shape_follows_the_fringe_law():
    cfg = make_config(alice_mode=AliceMode.REMOVED, trials_per_point=3000)
    scan = scan_fringes(cfg)
    assert len(scan.points) == 8
    assert scan.path_diff == pytest.approx(3.0)
    k = cfg.interferometer.k
    for pt in scan.points:
        expected = 0.5 * (1.0 + math.cos(k * pt.delta_r))
        sd = binom_sd(expected, pt.n_trials)
        assert abs(pt.counts_total / pt.n_trials - expected) < 5 * max(sd, 1e-3)


def test_scan_points_use_independent_streams():
    cfg = make_config(trials_per_point=2000)
    scan1 = scan_fringes(cfg)
    scan2 = scan_fringes(cfg, stream=(99,))
    assert [p.counts_total for p in scan1.points] != [
        p.counts_total for p in scan2.points
    ]
    # same call reproduces byte for byte
    assert scan_fringes(cfg) == scan1


def test_noise_singles_carry_their_own_fringe():
    # drown the signal so the scan sees mostly noise singles
    cfg = make_config(
        noise=NoiseSpec(epsilon=50.0, noise_fringe_visibility=0.3),
        alice_mode=AliceMode.REMOVED,
        trials_per_point=20000,
    )
    from whichway.fitting import fit_visibility

    scan = scan_fringes(cfg)
    xs = [p.delta_r for p in scan.points]
    ys = [p.counts_total for p in scan.points]
    est = fit_visibility(xs, ys, scan.k, n_trials=[p.n_trials for p in scan.points])
    assert abs(est.value - 0.3) < max(4 * est.stderr, 0.02)


def test_analytic_rates_match_simulation_with_noise_and_darks():
    settings = [
        dict(
            noise=NoiseSpec(epsilon=0.1, detector_efficiency=0.7, dark_rate=3.0e5),
            collapse=CollapseSpec.infinite(),
        ),
        dict(
            noise=NoiseSpec(jitter_sigma=1.0e-9),
            collapse=CollapseSpec(speed=10.0),
            geometry=Geometry(30.0, 36.0, 60.0),
        ),
        dict(
            source=SourceSpec(SourceType.TYPE2),
            alice_mode=AliceMode.MZ_BLOCKED,
            noise=NoiseSpec(detector_efficiency=0.9),
        ),
        dict(alice_mode=AliceMode.MZ_OPEN),
    ]
    n = 200_000
    for i, over in enumerate(settings):
        cfg = at_theta(make_config(trials_per_point=n, **over), 0.8)
        rates = analytic_rates(cfg)
        counts = run_batch(cfg, 100 + i, n)
        observed = {
            "bob": counts.n_bob / n,
            "alice_atd": counts.n_alice_atd / n,
            "alice_ard": counts.n_alice_ard / n,
            "coinc_atd": counts.n_coinc_atd / n,
            "coinc_ard": counts.n_coinc_ard / n,
        }
        for key, got in observed.items():
            want = rates[key]
            assert abs(got - want) <= 5 * binom_sd(want, n) + 1e-12, (
                f"case {i} rate {key}: simulated {got}, closed form {want}"
            )


def test_analytic_rates_reject_window_narrower_than_jitter():
    cfg = make_config(
        noise=NoiseSpec(jitter_sigma=1.0e-9),
        coincidence=CoincidenceSpec(window=4.0e-9),
    )
    with pytest.raises(ValueError, match="window"):
        analytic_rates(cfg)


def test_click_frequency_converges_across_master_seeds():
    # repeated runs should sit within five binomial deviations essentially always
    cfg = at_theta(make_config(trials_per_point=2000), 0.6)
    rates = analytic_rates(cfg)
    p = rates["coinc_atd"]
    sd = binom_sd(p, 2000)
    hits = 0
    n_seeds = 200
    for seed in range(n_seeds):
        counts = run_batch(cfg, seed, 2000)
        if abs(counts.n_coinc_atd / 2000 - p) <= 5 * sd:
            hits += 1
    assert hits >= math.ceil(0.99 * n_seeds)


def test_finite_front_decoheres_only_past_the_kink():
    # K = 3 m, front needs 6 m equivalent: arrives late, Bob stays coherent
    cfg = at_theta(make_config(collapse=CollapseSpec(speed=10.0)), 0.0)
    c = run_batch(cfg, 8, 6000)
    assert c.n_bob == 6000  # coherent maximum clicks every time
    # speed up the front so it beats Bob: conditional 1/4 reappears
    cfg2 = at_theta(make_config(collapse=CollapseSpec(speed=30.0)), 0.0)
    c2 = run_batch(cfg2, 8, 6000)
    assert abs(c2.n_bob / 6000 - 0.25) < 5 * binom_sd(0.25, 6000)
