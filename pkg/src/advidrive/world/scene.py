"""Scene and configuration types for the synthetic driving world.

A scene is a snapshot of a straight (optionally gently curved) road
corridor: the ego vehicle pose, road geometry, typed roadside entities,
and at most one pending intersection.  Distances are meters ahead of the
ego, speeds km/h, headings radians (positive = rightward), lateral
offsets meters from the lane center (positive = right).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

TURN_CHOICES = ("left", "straight", "right")

SCENARIOS = (
    "clear",
    "red_light",
    "green_light",
    "stop_sign",
    "ped_crossing",
    "ped_waiting",
    "parked_car",
    "cones",
)


class WorldConfigError(ValueError):
    """A world configuration violates a stated constraint."""


@dataclass
class TrafficLight:
    state: str  # "red" | "green"
    distance: float


@dataclass
class StopSign:
    distance: float


@dataclass
class Pedestrian:
    lateral: float
    distance: float
    moving: bool
    side: str = "right"  # curb the glyph is drawn at; crossing is not rendered


@dataclass
class ParkedCar:
    side: str
    distance: float


@dataclass
class ConstructionCones:
    distance: float


@dataclass
class Intersection:
    distance: float
    legal_turns: tuple[str, ...]


@dataclass
class EgoState:
    lateral: float = 0.0
    heading: float = 0.0
    speed: float = 0.0


@dataclass
class Scene:
    ego: EgoState
    lane_count: int
    lane_width: float
    curvature: float
    entities: list
    intersection: Optional[Intersection] = None
    # pose and odometer the renderer uses; frozen at intersection entry so
    # pixels never reveal which way the vehicle turns
    view: EgoState = field(default_factory=EgoState)
    view_odometer: float = 0.0
    odometer: float = 0.0

    def __post_init__(self):
        if self.lane_count < 1:
            raise WorldConfigError(f"lane count must be >= 1, got {self.lane_count}")
        if self.ego.speed < 0:
            raise WorldConfigError(f"speed must be >= 0, got {self.ego.speed}")
        for e in self.entities:
            if getattr(e, "distance", 0.0) < 0:
                raise WorldConfigError(f"entity distance must be >= 0: {e}")
        if self.intersection is not None and self.intersection.distance < 0:
            raise WorldConfigError("intersection distance must be >= 0")

    def copy(self) -> "Scene":
        return Scene(
            ego=replace(self.ego),
            lane_count=self.lane_count,
            lane_width=self.lane_width,
            curvature=self.curvature,
            entities=[replace(e) for e in self.entities],
            intersection=None if self.intersection is None
            else replace(self.intersection),
            view=replace(self.view),
            view_odometer=self.view_odometer,
            odometer=self.odometer,
        )


@dataclass(frozen=True)
class WorldConfig:
    """Knobs of the synthetic world; defaults are the desk-scale setup."""

    frame_h: int = 64
    frame_w: int = 96
    t_min: int = 40
    t_max: int = 80
    rate_hz: int = 10
    cruise_kmh: float = 40.0
    lane_count: int = 2
    lane_width: float = 3.5
    intersection_prob: float = 0.35
    legal_turns: tuple[str, ...] = TURN_CHOICES
    scenario_weights: tuple[tuple[str, float], ...] = (
        ("clear", 0.10),
        ("red_light", 0.14),
        ("green_light", 0.12),
        ("stop_sign", 0.12),
        ("ped_crossing", 0.16),
        ("ped_waiting", 0.14),
        ("parked_car", 0.11),
        ("cones", 0.11),
    )

    def validate(self) -> None:
        if self.frame_h < 16 or self.frame_w < 16:
            raise WorldConfigError(
                f"frame extents too small: {self.frame_h}x{self.frame_w}")
        if not (20 <= self.t_min <= self.t_max <= 200):
            raise WorldConfigError(
                f"episode length range must satisfy 20 <= t_min <= t_max <= 200, "
                f"got [{self.t_min}, {self.t_max}]")
        if self.rate_hz != 10:
            raise WorldConfigError(f"frame rate is fixed at 10 Hz, got {self.rate_hz}")
        if not 0.0 <= self.intersection_prob <= 1.0:
            raise WorldConfigError(
                f"intersection_prob must lie in [0, 1], got {self.intersection_prob}")
        if self.lane_count < 1:
            raise WorldConfigError(f"lane count must be >= 1, got {self.lane_count}")
        if self.cruise_kmh <= 0 or self.cruise_kmh > 80:
            raise WorldConfigError(
                f"cruise speed must lie in (0, 80] km/h, got {self.cruise_kmh}")
        if not self.legal_turns or any(t not in TURN_CHOICES for t in self.legal_turns):
            raise WorldConfigError(f"legal_turns must be a subset of {TURN_CHOICES}")
        names = [n for n, _ in self.scenario_weights]
        if any(n not in SCENARIOS for n in names) or not names:
            raise WorldConfigError(f"scenario names must come from {SCENARIOS}")
        if any(w < 0 for _, w in self.scenario_weights) or \
                sum(w for _, w in self.scenario_weights) <= 0:
            raise WorldConfigError("scenario weights must be nonnegative, sum > 0")
