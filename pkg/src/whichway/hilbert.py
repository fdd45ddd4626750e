"""Amplitude algebra on the joint polarization/arm space.

The simulator works in a fixed four dimensional Hilbert space: the
polarization of Alice's photon relative to her splitter axes (H transmitted,
V reflected) paired with the interferometer arm occupied by Bob's photon
(U upper, L lower).  One photon per side, no vacuum or multi photon terms;
amplitudes are stored densely as four complex numbers.

Everything here is immutable and every operation is a pure function, so this
module doubles as the analytic reference that the stochastic engine is
checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, NamedTuple

__all__ = [
    "Arm",
    "ArmDensity",
    "JointLabel",
    "LABELS",
    "Pol",
    "PureState",
    "ZeroProbabilityCollapse",
    "inner_product",
    "labels_for_arm",
    "labels_for_pol",
    "project",
    "reduce_to_bob_arm",
    "subspace_probability",
]

NORM_TOL = 1e-10
POSITIVITY_TOL = 1e-10
ZERO_PROB = 1e-14


class Pol(Enum):
    """Polarization label on Alice's side: H transmits at her splitter."""

    H = "H"
    V = "V"


class Arm(Enum):
    """Arm label on Bob's side: upper or lower interferometer arm."""

    U = "U"
    L = "L"


class JointLabel(NamedTuple):
    alice_pol: Pol
    bob_arm: Arm


LABELS: tuple[JointLabel, ...] = (
    JointLabel(Pol.H, Arm.U),
    JointLabel(Pol.H, Arm.L),
    JointLabel(Pol.V, Arm.U),
    JointLabel(Pol.V, Arm.L),
)

_INDEX = {label: i for i, label in enumerate(LABELS)}


def labels_for_pol(pol: Pol) -> frozenset[JointLabel]:
    """All joint labels with the given Alice polarization."""
    return frozenset(label for label in LABELS if label.alice_pol is pol)


def labels_for_arm(arm: Arm) -> frozenset[JointLabel]:
    """All joint labels with the given Bob arm."""
    return frozenset(label for label in LABELS if label.bob_arm is arm)


class ZeroProbabilityCollapse(Exception):
    """Conditioning on an outcome whose weight is numerically zero."""


def _checked_amp(z: complex) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError("amplitude must be finite")
    return z


@dataclass(frozen=True)
class PureState:
    """Normalized pure state; amplitudes ordered as in LABELS.

    The squared magnitudes must sum to 1 within NORM_TOL.  Use
    :meth:`from_map` with ``normalize=True`` to build a state from raw
    (unnormalized) amplitudes.
    """

    amps: tuple[complex, complex, complex, complex]

    def __post_init__(self) -> None:
        amps = tuple(_checked_amp(z) for z in self.amps)
        if len(amps) != len(LABELS):
            raise ValueError(f"expected {len(LABELS)} amplitudes, got {len(amps)}")
        object.__setattr__(self, "amps", amps)
        norm_sq = sum(abs(z) ** 2 for z in amps)
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise ValueError(f"squared norm is {norm_sq!r}, expected 1 within {NORM_TOL}")

    @classmethod
    def from_map(
        cls,
        amplitudes: Mapping[JointLabel, complex],
        *,
        normalize: bool = False,
    ) -> "PureState":
        unknown = set(amplitudes) - set(LABELS)
        if unknown:
            raise ValueError(f"unknown basis labels: {unknown}")
        amps = [complex(amplitudes.get(label, 0.0)) for label in LABELS]
        if normalize:
            norm = math.sqrt(sum(abs(z) ** 2 for z in amps))
            if norm**2 < ZERO_PROB:
                raise ValueError("cannot normalize a null state")
            amps = [z / norm for z in amps]
        return cls(tuple(amps))

    def amplitude(self, label: JointLabel) -> complex:
        return self.amps[_INDEX[label]]

    def as_map(self) -> dict[JointLabel, complex]:
        return {label: self.amps[i] for label, i in _INDEX.items()}

    def isclose(self, other: "PureState", tol: float = 1e-9) -> bool:
        return all(abs(a - b) <= tol for a, b in zip(self.amps, other.amps))


def inner_product(a: PureState, b: PureState) -> complex:
    """Hermitian inner product <a|b>, conjugate linear in the first slot."""
    return sum(x.conjugate() * y for x, y in zip(a.amps, b.amps))


def subspace_probability(subspace: Iterable[JointLabel], state: PureState) -> float:
    """Born weight of the span of the given basis labels."""
    wanted = frozenset(subspace)
    return float(sum(abs(state.amplitude(label)) ** 2 for label in wanted))


def project(
    subspace: Iterable[JointLabel], state: PureState
) -> tuple[float, PureState]:
    """Project onto the span of basis labels; return (probability, collapsed).

    Raises ZeroProbabilityCollapse when the outcome weight is below ZERO_PROB,
    since no collapsed state exists there.  Use :func:`subspace_probability`
    when only the weight is needed.
    """
    wanted = frozenset(subspace)
    prob = subspace_probability(wanted, state)
    if prob < ZERO_PROB:
        raise ZeroProbabilityCollapse(
            f"projection weight {prob!r} below {ZERO_PROB}; no collapsed state"
        )
    scale = 1.0 / math.sqrt(prob)
    amps = tuple(
        state.amps[i] * scale if label in wanted else 0.0j
        for label, i in _INDEX.items()
    )
    return prob, PureState(amps)


@dataclass(frozen=True)
class ArmDensity:
    """Bob's reduced arm state: diagonal weights and one off diagonal element.

    rho_uu + rho_ll must be 1 (trace) and |rho_ul|^2 <= rho_uu * rho_ll
    (positivity), both within POSITIVITY_TOL-scale slack.
    """

    rho_uu: float
    rho_ll: float
    rho_ul: complex

    def __post_init__(self) -> None:
        for name, value in (("rho_uu", self.rho_uu), ("rho_ll", self.rho_ll)):
            if not math.isfinite(value) or value < -POSITIVITY_TOL:
                raise ValueError(f"{name} must be a finite nonnegative real, got {value!r}")
        _checked_amp(self.rho_ul)
        trace = self.rho_uu + self.rho_ll
        if abs(trace - 1.0) > NORM_TOL:
            raise ValueError(f"trace is {trace!r}, expected 1 within {NORM_TOL}")
        if abs(self.rho_ul) ** 2 > self.rho_uu * self.rho_ll + POSITIVITY_TOL:
            raise ValueError("off diagonal element violates positivity")

    @property
    def coherence(self) -> float:
        """Magnitude of the arm off diagonal element."""
        return abs(self.rho_ul)


def reduce_to_bob_arm(state: PureState) -> ArmDensity:
    """Partial trace over Alice's polarization, keeping Bob's arm."""
    rho_uu = 0.0
    rho_ll = 0.0
    rho_ul = 0.0j
    for pol in Pol:
        up = state.amplitude(JointLabel(pol, Arm.U))
        low = state.amplitude(JointLabel(pol, Arm.L))
        rho_uu += abs(up) ** 2
        rho_ll += abs(low) ** 2
        rho_ul += up * low.conjugate()
    return ArmDensity(rho_uu, rho_ll, rho_ul)
