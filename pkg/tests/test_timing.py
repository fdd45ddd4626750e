import math

import numpy as np
import pytest

from whichway.timing import (
    CollapseSpec,
    EventTimes,
    Geometry,
    decohered_before_bob,
    flight_times,
    kink_center,
)

C = 3.0e8


def test_geometry_validation_and_path_diff():
    g = Geometry(path_s_to_a=30.0, path_s_to_b=33.0, dist_a_to_b=60.0)
    assert g.path_diff == pytest.approx(3.0)
    with pytest.raises(ValueError):
        Geometry(path_s_to_a=0.0, path_s_to_b=33.0, dist_a_to_b=60.0)
    with pytest.raises(ValueError):
        Geometry(path_s_to_a=30.0, path_s_to_b=33.0, dist_a_to_b=60.0, c_eff=-1.0)


def test_collapse_spec_delay():
    inst = CollapseSpec.infinite()
    assert inst.is_infinite
    assert inst.delay(60.0, C) == 0.0
    ten_c = CollapseSpec(speed=10.0)
    assert ten_c.delay(60.0, C) == pytest.approx(60.0 / (10.0 * C))
    with pytest.raises(ValueError):
        CollapseSpec(speed=0.0)
    with pytest.raises(ValueError):
        CollapseSpec(speed=math.nan)


def test_flight_times_with_jitter_clamped():
    g = Geometry(30.0, 33.0, 60.0)
    t = flight_times(g)
    assert t.tau_a == pytest.approx(1.0e-7)
    assert t.tau_b == pytest.approx(1.1e-7)
    jittered = flight_times(g, jitter_a=-2.0e-7, jitter_b=1.0e-9)
    assert jittered.tau_a == 0.0
    assert jittered.tau_b == pytest.approx(1.11e-7)
    with pytest.raises(ValueError):
        EventTimes(-1.0, 0.0)


def test_instantaneous_collapse_needs_strictly_earlier_alice():
    g = Geometry(30.0, 33.0, 60.0)
    inst = CollapseSpec.infinite()
    assert decohered_before_bob(EventTimes(1.0e-7, 1.1e-7), g, inst)
    assert not decohered_before_bob(EventTimes(1.1e-7, 1.0e-7), g, inst)
    # a tie stays coherent under instantaneous collapse
    assert not decohered_before_bob(EventTimes(1.0e-7, 1.0e-7), g, inst)


def test_finite_front_boundary_is_inclusive():
    g = Geometry(30.0, 36.0, 60.0)  # K = 6 m
    crit = CollapseSpec(speed=10.0)  # front needs 60/(10c) s = 2e-8 s = K/c exactly
    t = flight_times(g)
    assert decohered_before_bob(t, g, crit)
    just_fast = CollapseSpec(speed=10.0001)
    assert decohered_before_bob(t, g, just_fast)
    just_slow = CollapseSpec(speed=9.9999)
    assert not decohered_before_bob(t, g, just_slow)


def test_kink_center():
    g = Geometry(30.0, 33.0, 60.0)
    assert kink_center(g, CollapseSpec.infinite()) == 0.0
    assert kink_center(g, CollapseSpec(speed=10.0)) == pytest.approx(6.0)
    assert kink_center(g, CollapseSpec(speed=20.0)) == pytest.approx(3.0)


def test_decoherence_rule_matches_path_difference_threshold():
    # without jitter the rule reduces to comparing K against d / speed
    rng = np.random.default_rng(5)
    for _ in range(300):
        a = float(rng.uniform(1.0, 100.0))
        b = float(rng.uniform(1.0, 100.0))
        d = float(rng.uniform(1.0, 200.0))
        g = Geometry(a, b, d)
        t = flight_times(g)
        speed = float(rng.uniform(0.5, 50.0))
        expected = g.path_diff >= d / speed - 1e-12 * max(1.0, d / speed)
        got = decohered_before_bob(t, g, CollapseSpec(speed=speed))
        if abs(g.path_diff - d / speed) > 1e-9:
            assert got == expected
        inst = decohered_before_bob(t, g, CollapseSpec.infinite())
        assert inst == (g.path_diff > 0)
