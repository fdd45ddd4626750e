import cmath
import math

import numpy as np
import pytest

from whichway.hilbert import (
    LABELS,
    Arm,
    ArmDensity,
    JointLabel,
    Pol,
    PureState,
    ZeroProbabilityCollapse,
    inner_product,
    labels_for_arm,
    labels_for_pol,
    project,
    reduce_to_bob_arm,
    subspace_probability,
)

HU = JointLabel(Pol.H, Arm.U)
HL = JointLabel(Pol.H, Arm.L)
VU = JointLabel(Pol.V, Arm.U)
VL = JointLabel(Pol.V, Arm.L)

R = math.sqrt(0.5)


def random_state(rng: np.random.Generator) -> PureState:
    raw = rng.normal(size=4) + 1j * rng.normal(size=4)
    return PureState.from_map(dict(zip(LABELS, raw)), normalize=True)


def test_labels_cover_the_four_dimensional_space():
    assert len(LABELS) == 4
    assert labels_for_pol(Pol.H) == frozenset({HU, HL})
    assert labels_for_arm(Arm.L) == frozenset({HL, VL})


def test_pure_state_rejects_unnormalized_amplitudes():
    with pytest.raises(ValueError, match="squared norm"):
        PureState((1.0, 1.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        PureState((math.nan, 0.0, 0.0, 0.0))


def test_from_map_normalizes_and_round_trips():
    state = PureState.from_map({HU: 3.0, VL: 4.0j}, normalize=True)
    assert state.amplitude(HU) == pytest.approx(0.6)
    assert state.amplitude(VL) == pytest.approx(0.8j)
    assert state.amplitude(HL) == 0
    assert state.as_map()[VL] == state.amplitude(VL)


def test_from_map_rejects_unknown_labels_and_null_states():
    with pytest.raises(ValueError, match="unknown"):
        PureState.from_map({("x", "y"): 1.0})  # type: ignore[dict-item]
    with pytest.raises(ValueError, match="null"):
        PureState.from_map({HU: 0.0}, normalize=True)


def test_inner_product_is_conjugate_symmetric():
    rng = np.random.default_rng(7)
    a, b = random_state(rng), random_state(rng)
    assert inner_product(a, b) == pytest.approx(inner_product(b, a).conjugate())
    assert inner_product(a, a) == pytest.approx(1.0)


def test_projection_on_bell_like_state():
    state = PureState.from_map({HU: R, VL: R})
    prob, collapsed = project(labels_for_pol(Pol.H), state)
    assert prob == pytest.approx(0.5)
    assert collapsed.amplitude(HU) == pytest.approx(1.0)
    assert collapsed.amplitude(VL) == 0


def test_projection_on_empty_support_raises():
    state = PureState.from_map({HU: 1.0})
    with pytest.raises(ZeroProbabilityCollapse):
        project(labels_for_pol(Pol.V), state)
    # the probability-only query stays usable there
    assert subspace_probability(labels_for_pol(Pol.V), state) == 0.0


def test_reduce_product_state_keeps_full_coherence():
    # both polarizations feed U and L with the same amplitudes
    state = PureState.from_map({HU: 0.5, HL: 0.5, VU: 0.5, VL: 0.5})
    rho = reduce_to_bob_arm(state)
    assert rho.rho_uu == pytest.approx(0.5)
    assert rho.coherence == pytest.approx(0.5)


def test_reduce_bell_state_kills_coherence():
    rho = reduce_to_bob_arm(PureState.from_map({HU: R, VL: R}))
    assert rho.rho_uu == pytest.approx(0.5)
    assert rho.rho_ll == pytest.approx(0.5)
    assert rho.coherence == pytest.approx(0.0)


def test_arm_density_validation():
    with pytest.raises(ValueError, match="trace"):
        ArmDensity(0.7, 0.7, 0.0j)
    with pytest.raises(ValueError, match="positivity"):
        ArmDensity(0.5, 0.5, 0.6 + 0.0j)
    with pytest.raises(ValueError):
        ArmDensity(-0.2, 1.2, 0.0j)


def test_reduction_invariants_on_random_states():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        state = random_state(rng)
        rho = reduce_to_bob_arm(state)
        assert rho.rho_uu + rho.rho_ll == pytest.approx(1.0)
        assert rho.coherence**2 <= rho.rho_uu * rho.rho_ll + 1e-9
        p_h = subspace_probability(labels_for_pol(Pol.H), state)
        p_v = subspace_probability(labels_for_pol(Pol.V), state)
        assert p_h + p_v == pytest.approx(1.0)
        if p_h > 1e-12:
            _, collapsed = project(labels_for_pol(Pol.H), state)
            assert inner_product(collapsed, collapsed) == pytest.approx(1.0)


def test_projection_preserves_relative_phase_within_subspace():
    phase = cmath.exp(0.7j)
    state = PureState.from_map({HU: 0.5, HL: 0.5 * phase, VL: R})
    _, collapsed = project(labels_for_pol(Pol.H), state)
    ratio = collapsed.amplitude(HL) / collapsed.amplitude(HU)
    assert ratio == pytest.approx(phase)
