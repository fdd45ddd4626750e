"""Flight times and the propagation rule for Alice's projection.

All lengths are meters, times are seconds.  c_eff is the effective signal
speed along the optical paths; the collapse front launched by Alice's
measurement travels from her to Bob at ``speed`` multiples of c_eff
(``math.inf`` meaning instantaneous).  The interferometer's internal path
difference (micrometers) is ignored here; it only moves the fringe phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "CollapseSpec",
    "EventTimes",
    "Geometry",
    "decohered_before_bob",
    "flight_times",
    "kink_center",
]


@dataclass(frozen=True)
class Geometry:
    """Source to detector path lengths and the Alice to Bob distance."""

    path_s_to_a: float
    path_s_to_b: float
    dist_a_to_b: float
    c_eff: float = 3.0e8

    def __post_init__(self) -> None:
        for name in ("path_s_to_a", "path_s_to_b", "dist_a_to_b", "c_eff"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be a positive real, got {value!r}")

    @property
    def path_diff(self) -> float:
        """K, the Bob minus Alice source path difference in meters."""
        return self.path_s_to_b - self.path_s_to_a


@dataclass(frozen=True)
class CollapseSpec:
    """Propagation speed of the projection front, in units of c_eff."""

    speed: float = math.inf

    def __post_init__(self) -> None:
        if math.isnan(self.speed) or self.speed <= 0:
            raise ValueError(f"speed must be positive or inf, got {self.speed!r}")

    @classmethod
    def infinite(cls) -> "CollapseSpec":
        return cls(math.inf)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.speed)

    def delay(self, dist: float, c_eff: float) -> float:
        """Travel time of the front over dist meters; 0 when instantaneous."""
        if self.is_infinite:
            return 0.0
        return dist / (self.speed * c_eff)


@dataclass(frozen=True)
class EventTimes:
    tau_a: float
    tau_b: float

    def __post_init__(self) -> None:
        if self.tau_a < 0 or self.tau_b < 0:
            raise ValueError("event times must be nonnegative")


def flight_times(g: Geometry, jitter_a: float = 0.0, jitter_b: float = 0.0) -> EventTimes:
    """Photon arrival times at the two measurement sites, clamped at 0."""
    return EventTimes(
        tau_a=max(0.0, g.path_s_to_a / g.c_eff + jitter_a),
        tau_b=max(0.0, g.path_s_to_b / g.c_eff + jitter_b),
    )


def decohered_before_bob(times: EventTimes, g: Geometry, collapse: CollapseSpec) -> bool:
    """Whether Alice's projection front reaches Bob before his detection.

    Instantaneous collapse requires strictly tau_a < tau_b; a finite front
    must cover the Alice to Bob distance by tau_b.
    """
    if collapse.is_infinite:
        return times.tau_a < times.tau_b
    return times.tau_a + collapse.delay(g.dist_a_to_b, g.c_eff) <= times.tau_b


def kink_center(g: Geometry, collapse: CollapseSpec) -> float:
    """Path difference K at which the decoherence condition flips, meters.

    Zero for instantaneous collapse, dist_a_to_b / speed otherwise.
    """
    if collapse.is_infinite:
        return 0.0
    return g.dist_a_to_b / collapse.speed
