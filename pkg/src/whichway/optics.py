"""Optical elements and click probability laws for the twin photon setup.

Source S emits a photon pair with preselected polarization planes: Alice's
photon at angle phi, Bob's at phi plus a type dependent offset (0 for a
type 1 source, 90 degrees for type 2).  Each photon meets a polarizing
splitter whose axes sit at 45 degrees to its polarization plane; the
transmitted component is labeled H, the reflected one V.  On Bob's side the
two splitter outputs feed the upper (U) and lower (L) arms of an
interferometer whose recombined output is watched by the fringe detector FD.
Alice's two outputs are watched by the transmitted beam detector ATD and the
reflected beam detector ARD.

Three joint state models are implemented:

* ``REDUCED_BELL``: the two term polarization correlated state obtained by
  keeping only the matching transmitted/reflected pairings.  Under this
  model Bob's photon interferes at full contrast until Alice's projection
  has reached him, after which his click rate follows the conditional law
  ``zeta + eta * (surviving arm weight)``.
* ``PRODUCT``: the literal product of the two preselected single photon
  states pushed through both splitters unitarily.  Alice's measurement never
  changes Bob's reduced state, so Bob interferes unconditionally.
* ``BELL``: an equal weight maximally entangled two term state with no
  preselected planes.  Bob's reduced state is arm diagonal whether or not
  Alice has measured, so he never interferes.

The fringe law is ``P(FD) = zeta + eta * (rho_uu + rho_ll +
2 |rho_ul| cos Theta)`` with ``Theta = k * delta_r + theta_0``; any constant
phase carried by the splitter amplitudes is folded into ``theta_0``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum

from .hilbert import (
    Arm,
    ArmDensity,
    JointLabel,
    Pol,
    PureState,
    labels_for_pol,
    project,
    reduce_to_bob_arm,
    subspace_probability,
)

__all__ = [
    "AliceDetector",
    "BeamSplitterSpec",
    "BobLocalState",
    "CoherentSplit",
    "DefiniteArm",
    "InterferometerSpec",
    "InvalidGeometry",
    "ModelMismatch",
    "SourceSpec",
    "SourceType",
    "StateModel",
    "alice_transmit_probability",
    "bob_click_probability",
    "bob_local_state",
    "conditional_fd_probability",
    "fd_probability",
    "pol_for_detector",
    "prepare_initial",
    "split_joint_state",
    "surviving_arm",
]

UNITARITY_TOL = 1e-12
ANGLE_TOL_DEG = 1e-6
FRINGE_BOUND_TOL = 1e-9


class InvalidGeometry(Exception):
    """Setup geometry outside the validity of the splitting rules."""


class ModelMismatch(Exception):
    """A joint state whose structure disagrees with the requested model."""


class SourceType(Enum):
    TYPE1 = "type1"
    TYPE2 = "type2"


class StateModel(Enum):
    """Joint state reading used downstream of the two splitters."""

    REDUCED_BELL = "reduced_bell"
    PRODUCT = "product"
    BELL = "bell"


class AliceDetector(Enum):
    ATD = "atd"
    ARD = "ard"


@dataclass(frozen=True)
class SourceSpec:
    """Twin photon source: matching type and Alice side polarization angle."""

    matching_type: SourceType
    phi_deg: float = 45.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.phi_deg) or not 0.0 <= self.phi_deg < 180.0:
            raise ValueError(f"phi_deg must lie in [0, 180), got {self.phi_deg!r}")

    @property
    def theta_pol_deg(self) -> float:
        """Polarization plane offset of Bob's photon relative to Alice's."""
        return 0.0 if self.matching_type is SourceType.TYPE1 else 90.0


@dataclass(frozen=True)
class BeamSplitterSpec:
    """Lossless two port splitter: amplitudes and phase shifts per port."""

    tau: float
    rho: float
    phase_t: float = 0.0
    phase_r: float = 0.0

    def __post_init__(self) -> None:
        if self.tau < 0 or self.rho < 0:
            raise ValueError("tau and rho must be nonnegative")
        total = self.tau**2 + self.rho**2
        if abs(total - 1.0) > UNITARITY_TOL:
            raise ValueError(f"tau^2 + rho^2 is {total!r}, expected 1 within {UNITARITY_TOL}")
        for name in ("phase_t", "phase_r"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def balanced(cls) -> "BeamSplitterSpec":
        amp = math.sqrt(0.5)
        return cls(tau=amp, rho=amp)

    @property
    def t_amp(self) -> complex:
        return self.tau * cmath.exp(1j * self.phase_t)

    @property
    def r_amp(self) -> complex:
        return self.rho * cmath.exp(1j * self.phase_r)


@dataclass(frozen=True)
class InterferometerSpec:
    """Bob's recombining interferometer and fringe law constants.

    zeta is the phase independent background, eta the fringe gain.  The
    fringe law bracket never exceeds 2 over valid arm states, so
    zeta + 2 * eta <= 1 keeps every probability inside [0, 1].
    """

    k: float
    delta_r: float = 0.0
    theta_0: float = 0.0
    zeta: float = 0.0
    eta: float = 0.5

    def __post_init__(self) -> None:
        if not math.isfinite(self.k) or self.k <= 0:
            raise ValueError(f"k must be a positive real, got {self.k!r}")
        for name in ("delta_r", "theta_0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not math.isfinite(self.zeta) or self.zeta < 0:
            raise ValueError("zeta must be a nonnegative real")
        if not math.isfinite(self.eta) or self.eta <= 0:
            raise ValueError("eta must be a positive real")
        if self.zeta + 2.0 * self.eta > 1.0 + FRINGE_BOUND_TOL:
            raise ValueError(
                f"zeta + 2*eta = {self.zeta + 2 * self.eta!r} exceeds 1; "
                "fringe law would leave [0, 1]"
            )

    @property
    def theta(self) -> float:
        return self.k * self.delta_r + self.theta_0


@dataclass(frozen=True)
class CoherentSplit:
    """Bob's photon coherently distributed over both arms."""

    amp_u: complex
    amp_l: complex

    def as_arm_density(self) -> ArmDensity:
        norm = abs(self.amp_u) ** 2 + abs(self.amp_l) ** 2
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"arm amplitudes have squared norm {norm!r}, expected 1")
        return ArmDensity(
            abs(self.amp_u) ** 2,
            abs(self.amp_l) ** 2,
            self.amp_u * self.amp_l.conjugate(),
        )


@dataclass(frozen=True)
class DefiniteArm:
    """Bob's photon known to occupy a single arm."""

    arm: Arm

    def as_arm_density(self) -> ArmDensity:
        if self.arm is Arm.U:
            return ArmDensity(1.0, 0.0, 0.0j)
        return ArmDensity(0.0, 1.0, 0.0j)


BobLocalState = CoherentSplit | DefiniteArm | ArmDensity


def prepare_initial(src: SourceSpec) -> tuple[float, float]:
    """Polarization angles (degrees) of the emitted pair: Alice's, Bob's."""
    alice = src.phi_deg % 180.0
    bob = (src.phi_deg + src.theta_pol_deg) % 180.0
    return alice, bob


def _require_diagonal_orientation(src: SourceSpec) -> None:
    # The H/V splitting amplitudes below assume the polarization plane sits
    # at 45 degrees to the splitter axes (mod 90).
    offset = abs((src.phi_deg % 90.0) - 45.0)
    if offset > ANGLE_TOL_DEG:
        raise InvalidGeometry(
            f"phi_deg={src.phi_deg!r} is {offset:.3g} deg away from the diagonal "
            "orientation required by the splitting rule"
        )


def split_joint_state(
    src: SourceSpec,
    bs_a: BeamSplitterSpec,
    bs_b: BeamSplitterSpec,
    model: StateModel,
) -> PureState:
    """Joint (polarization, arm) state after both splitters, per model.

    H transmits, so Bob's H component enters the upper arm and his V
    component the lower arm.  A type 1 source pairs Alice H with Bob H
    (arm U); a type 2 source pairs Alice H with Bob V (arm L).
    """
    _require_diagonal_orientation(src)
    ta, ra = bs_a.t_amp, bs_a.r_amp
    tb, rb = bs_b.t_amp, bs_b.r_amp
    hu = JointLabel(Pol.H, Arm.U)
    hl = JointLabel(Pol.H, Arm.L)
    vu = JointLabel(Pol.V, Arm.U)
    vl = JointLabel(Pol.V, Arm.L)

    if model is StateModel.PRODUCT:
        # Independent photons: every pairing appears, amplitudes factorize.
        return PureState.from_map(
            {hu: ta * tb, hl: ta * rb, vu: ra * tb, vl: ra * rb},
            normalize=True,
        )

    if src.matching_type is SourceType.TYPE1:
        first, second = hu, vl
        amp_first, amp_second = ta * tb, ra * rb
    else:
        first, second = hl, vu
        amp_first, amp_second = ta * rb, ra * tb

    if model is StateModel.BELL:
        phase_first = amp_first / abs(amp_first) if abs(amp_first) > 0 else 1.0
        phase_second = amp_second / abs(amp_second) if abs(amp_second) > 0 else 1.0
        amp = math.sqrt(0.5)
        return PureState.from_map(
            {first: amp * phase_first, second: amp * phase_second}
        )

    return PureState.from_map(
        {first: amp_first, second: amp_second}, normalize=True
    )


def fd_probability(rho: ArmDensity, ifm: InterferometerSpec) -> float:
    """Fringe detector click probability for a given arm state.

    Only the magnitude of rho_ul enters; its phase is folded into theta_0.
    The interferometer invariant keeps the result inside [0, 1].
    """
    bracket = rho.rho_uu + rho.rho_ll + 2.0 * rho.coherence * math.cos(ifm.theta)
    return ifm.zeta + ifm.eta * bracket


def pol_for_detector(click: AliceDetector) -> Pol:
    """Polarization outcome heralded by an Alice click (H transmits)."""
    return Pol.H if click is AliceDetector.ATD else Pol.V


def surviving_arm(src_type: SourceType, click: AliceDetector) -> Arm:
    """Arm containing Bob's photon once Alice's click has selected a term."""
    if src_type is SourceType.TYPE1:
        return Arm.U if click is AliceDetector.ATD else Arm.L
    return Arm.L if click is AliceDetector.ATD else Arm.U


def conditional_fd_probability(
    src_type: SourceType,
    alice_click: AliceDetector,
    ifm: InterferometerSpec,
    bs_b: BeamSplitterSpec,
) -> float:
    """Collapse model FD rate conditioned on Alice's click arriving first.

    The surviving term leaves Bob's photon in a single arm, removing the
    interference cross term: the rate is zeta + eta times the squared
    splitter amplitude feeding that arm, independent of Theta.  This is the
    REDUCED_BELL model's own conditional law; the standard reduction used by
    the oracle models gives zeta + eta instead.
    """
    arm = surviving_arm(src_type, alice_click)
    weight = bs_b.tau**2 if arm is Arm.U else bs_b.rho**2
    return ifm.zeta + ifm.eta * weight


def _expected_support(src_type: SourceType) -> frozenset[JointLabel]:
    if src_type is SourceType.TYPE1:
        return frozenset({JointLabel(Pol.H, Arm.U), JointLabel(Pol.V, Arm.L)})
    return frozenset({JointLabel(Pol.H, Arm.L), JointLabel(Pol.V, Arm.U)})


def _check_model_structure(
    joint: PureState, model: StateModel, src_type: SourceType
) -> None:
    tol = 1e-9
    amps = joint.as_map()
    if model in (StateModel.REDUCED_BELL, StateModel.BELL):
        support = _expected_support(src_type)
        stray = [
            label for label, amp in amps.items()
            if label not in support and abs(amp) > tol
        ]
        if stray:
            raise ModelMismatch(
                f"{model.value} state for {src_type.value} has weight on {stray}"
            )
        if model is StateModel.BELL:
            mags = sorted(abs(amps[label]) for label in support)
            if abs(mags[0] - mags[1]) > tol:
                raise ModelMismatch("bell state requires equal magnitudes")
    else:
        hu = amps[JointLabel(Pol.H, Arm.U)]
        hl = amps[JointLabel(Pol.H, Arm.L)]
        vu = amps[JointLabel(Pol.V, Arm.U)]
        vl = amps[JointLabel(Pol.V, Arm.L)]
        if abs(hu * vl - hl * vu) > tol:
            raise ModelMismatch("product state amplitudes do not factorize")


def bob_local_state(
    joint: PureState,
    alice_measured: AliceDetector | None,
    model: StateModel,
    src_type: SourceType,
    bs_b: BeamSplitterSpec,
) -> BobLocalState:
    """Bob's local description given the model and Alice's (optional) click.

    REDUCED_BELL keeps Bob coherent over his own splitter amplitudes until a
    click has arrived, then pins him to the surviving arm.  The oracle
    models reduce the (optionally projected) joint state by partial trace.
    """
    _check_model_structure(joint, model, src_type)
    if model is StateModel.REDUCED_BELL:
        if alice_measured is None:
            return CoherentSplit(bs_b.t_amp, bs_b.r_amp)
        return DefiniteArm(surviving_arm(src_type, alice_measured))
    if alice_measured is None:
        return reduce_to_bob_arm(joint)
    _, collapsed = project(labels_for_pol(pol_for_detector(alice_measured)), joint)
    return reduce_to_bob_arm(collapsed)


def alice_transmit_probability(joint: PureState) -> float:
    """Born weight of Alice's transmitted (H) outcome in the joint state."""
    return subspace_probability(labels_for_pol(Pol.H), joint)


def bob_click_probability(
    src: SourceSpec,
    model: StateModel,
    bs_a: BeamSplitterSpec,
    bs_b: BeamSplitterSpec,
    ifm: InterferometerSpec,
    alice_outcome: Pol | None,
    decohered: bool,
) -> float:
    """Closed form FD click probability for one trial condition.

    ``alice_outcome`` is the polarization selected by Alice's measurement
    (None when she does not measure); ``decohered`` says whether her
    projection reached Bob before his detection.  Timing only matters to the
    REDUCED_BELL model; the oracle models commute, so their conditioning
    applies whenever Alice measures at all.
    """
    if model is StateModel.REDUCED_BELL:
        if alice_outcome is not None and decohered:
            click = AliceDetector.ATD if alice_outcome is Pol.H else AliceDetector.ARD
            return conditional_fd_probability(src.matching_type, click, ifm, bs_b)
        coherent = CoherentSplit(bs_b.t_amp, bs_b.r_amp)
        return fd_probability(coherent.as_arm_density(), ifm)
    joint = split_joint_state(src, bs_a, bs_b, model)
    if alice_outcome is not None:
        _, collapsed = project(labels_for_pol(alice_outcome), joint)
        return fd_probability(reduce_to_bob_arm(collapsed), ifm)
    return fd_probability(reduce_to_bob_arm(joint), ifm)
