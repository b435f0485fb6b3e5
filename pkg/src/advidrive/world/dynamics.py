"""World stepping and the scripted expert driver.

The expert keeps the lane with a proportional controller, brakes along a
constant-deceleration envelope for red lights, stop signs, and crossing
pedestrians, slows for passable obstructions, and executes intersection
turns with a heading controller.  The approach to an intersection is
identical for every route intent (slow to turn speed, enter, proceed
slowly); only the steering after entry differs.  Combined with the
frozen render pose at entry, this makes frames carry zero information
about the route intent.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .scene import (
    ConstructionCones,
    EgoState,
    Intersection,
    ParkedCar,
    Pedestrian,
    Scene,
    StopSign,
    TrafficLight,
    WorldConfig,
)

DT = 0.1                 # 10 Hz tick
A_BRAKE = 3.0            # m/s^2, envelope deceleration
A_ACC = 1.8              # m/s^2, acceleration limit
STOP_MARGIN = 2.0        # m short of a stop obstacle
PASS_SPEED = 18.0        # km/h past cones / parked cars
TURN_SPEED = 18.0        # km/h through intersections, any intent
SLOW_ZONE = 22.0         # m, start slowing for passable obstructions
BRAKE_CONSIDER = 35.0    # m, obstacles farther than this are ignored
WHEELBASE = 2.7          # m
STEER_RATIO = 15.0       # steering wheel deg per road wheel deg
MAX_STEER = 540.0        # deg, hardware bound
TURN_STEER_LIMIT = 240.0  # deg, bound during scripted turns
K_LAT = 8.0              # deg per m of lateral error
K_HEAD = 120.0           # deg per rad of heading error
K_TURN = 300.0           # deg per rad of heading error during a turn
PED_WALK_SPEED = 1.5     # m/s across the road
STOP_SIGN_HOLD = 10      # ticks stopped before a stop sign clears
ENTRY_DISTANCE = 0.5     # m, intersection counts as entered
TURN_TAIL_TICKS = 34     # ticks an episode continues after entry
MAX_SPEED = 80.0         # km/h


def braking_envelope_kmh(distance_m: float) -> float:
    """Max speed from which a stop at STOP_MARGIN is reachable at A_BRAKE."""
    gap = max(0.0, distance_m - STOP_MARGIN)
    return 3.6 * math.sqrt(2.0 * A_BRAKE * gap)


def _turn_target_heading(route_intent: str) -> float:
    if route_intent == "left":
        return -math.pi / 2
    if route_intent == "right":
        return math.pi / 2
    return 0.0


def expert_policy(scene: Scene, route_intent: str,
                  config: WorldConfig | None = None) -> tuple[float, float]:
    """Expert (speed km/h, steering-wheel deg) for the current scene.

    Steering sign convention: left < 0, right > 0.
    """
    cruise = config.cruise_kmh if config is not None else 40.0
    target = cruise

    inside = scene.intersection is not None and \
        scene.intersection.distance <= ENTRY_DISTANCE

    for e in scene.entities:
        d = e.distance
        if isinstance(e, TrafficLight) and e.state == "red" and d <= BRAKE_CONSIDER:
            target = min(target, braking_envelope_kmh(d))
        elif isinstance(e, StopSign) and d <= BRAKE_CONSIDER:
            target = min(target, braking_envelope_kmh(d))
        elif isinstance(e, Pedestrian) and e.moving and d <= BRAKE_CONSIDER:
            target = min(target, braking_envelope_kmh(d))
        elif isinstance(e, (ParkedCar, ConstructionCones)) and d <= SLOW_ZONE:
            target = min(target, PASS_SPEED)

    if scene.intersection is not None:
        if inside:
            target = min(target, TURN_SPEED)
        else:
            # slow toward turn speed on approach, identically for all intents
            d = scene.intersection.distance
            allowed = math.sqrt((TURN_SPEED / 3.6) ** 2 + 2.0 * A_BRAKE * max(0.0, d))
            target = min(target, 3.6 * allowed)

    prev = scene.ego.speed
    speed = min(target, prev + A_ACC * DT * 3.6)
    speed = float(np.clip(speed, 0.0, MAX_SPEED))

    if inside and route_intent in ("left", "right"):
        err = _turn_target_heading(route_intent) - scene.ego.heading
        steering = float(np.clip(K_TURN * err, -TURN_STEER_LIMIT, TURN_STEER_LIMIT))
    else:
        road_heading = scene.curvature * scene.odometer
        steering = -K_LAT * scene.ego.lateral \
            - K_HEAD * (scene.ego.heading - road_heading) \
            + math.degrees(math.atan(WHEELBASE * scene.curvature)) * STEER_RATIO
        steering = float(np.clip(steering, -MAX_STEER, MAX_STEER))
    return speed, steering


class World:
    """Deterministic corridor world; one scenario per episode."""

    def __init__(self, seed: int, config: WorldConfig, route_intent: str | None = None):
        config.validate()
        self.config = config
        self.seed = int(seed)
        rng = np.random.default_rng([int(seed), 0x5EED])

        self.t_limit = int(rng.integers(config.t_min, config.t_max + 1))
        has_intersection = rng.random() < config.intersection_prob
        names = [n for n, _ in config.scenario_weights]
        weights = np.array([w for _, w in config.scenario_weights], dtype=float)
        scenario = str(rng.choice(names, p=weights / weights.sum()))
        drawn_intent = str(rng.choice(list(config.legal_turns)))

        ego = EgoState(
            lateral=float(rng.uniform(-0.5, 0.5)),
            heading=float(rng.uniform(-0.03, 0.03)),
            speed=float(config.cruise_kmh * rng.uniform(0.85, 1.0)),
        )
        curvature = 0.0
        entities: list = []
        intersection = None

        if has_intersection:
            scenario = "intersection"
            self.route_intent = route_intent if route_intent is not None else drawn_intent
            if self.route_intent not in config.legal_turns:
                raise ValueError(
                    f"route intent {self.route_intent!r} not in {config.legal_turns}")
            intersection = Intersection(
                distance=float(rng.uniform(18.0, 28.0)),
                legal_turns=tuple(config.legal_turns),
            )
        else:
            self.route_intent = "straight"
            d0 = float(rng.uniform(20.0, 30.0))
            if scenario in ("clear", "green_light", "parked_car", "cones",
                            "ped_waiting"):
                curvature = float(rng.uniform(-0.005, 0.005))
            if scenario == "red_light":
                entities.append(TrafficLight("red", d0))
            elif scenario == "green_light":
                entities.append(TrafficLight("green", d0))
            elif scenario == "stop_sign":
                entities.append(StopSign(d0))
            elif scenario in ("ped_crossing", "ped_waiting"):
                side = str(rng.choice(["left", "right"]))
                half = config.lane_count * config.lane_width / 2.0
                sgn = -1.0 if side == "left" else 1.0
                entities.append(Pedestrian(
                    lateral=sgn * (half + 0.6),
                    distance=d0,
                    moving=(scenario == "ped_crossing"),
                    side=side,
                ))
            elif scenario == "parked_car":
                entities.append(ParkedCar(str(rng.choice(["left", "right"])), d0))
            elif scenario == "cones":
                entities.append(ConstructionCones(d0))

        self.scenario = scenario
        self._scene = Scene(
            ego=ego,
            lane_count=config.lane_count,
            lane_width=config.lane_width,
            curvature=curvature,
            entities=entities,
            intersection=intersection,
            view=replace(ego),
            view_odometer=0.0,
            odometer=0.0,
        )
        self.tick = 0
        self.entered_tick: int | None = None
        self._stop_hold = 0
        self._ped_progress = 0.0

    @property
    def scene(self) -> Scene:
        return self._scene

    @property
    def terminal(self) -> bool:
        if self.tick >= self.t_limit:
            return True
        if self.entered_tick is not None and \
                self.tick - self.entered_tick >= TURN_TAIL_TICKS:
            return True
        return False

    def expert_action(self) -> tuple[float, float]:
        return expert_policy(self._scene, self.route_intent, self.config)

    def step(self, speed_kmh: float, steering_deg: float) -> None:
        """Advance one tick applying the given controls to the ego."""
        s = self._scene
        v = float(np.clip(speed_kmh, 0.0, MAX_SPEED)) / 3.6
        steer = float(np.clip(steering_deg, -MAX_STEER, MAX_STEER))

        wheel = math.radians(steer / STEER_RATIO)
        yaw_rate = (v / WHEELBASE) * math.tan(wheel)
        s.ego.heading += yaw_rate * DT
        s.ego.lateral += v * math.sin(s.ego.heading) * DT
        advance = v * math.cos(s.ego.heading) * DT
        advance = max(0.0, advance)
        s.odometer += advance
        s.ego.speed = v * 3.6

        inside = s.intersection is not None and \
            s.intersection.distance <= ENTRY_DISTANCE
        if not inside:
            s.view = replace(s.ego)
            s.view_odometer = s.odometer

        for e in list(s.entities):
            e.distance = max(0.0, e.distance - advance)
            if isinstance(e, Pedestrian) and e.moving:
                step = PED_WALK_SPEED * DT
                e.lateral += -step if e.lateral > 0 else step
                self._ped_progress += step
                road_half = s.lane_count * s.lane_width / 2.0
                if self._ped_progress >= 2.0 * road_half + 1.2:
                    e.moving = False  # reached the far curb
            if isinstance(e, (ParkedCar, ConstructionCones, TrafficLight)) and \
                    e.distance <= 0.3:
                if isinstance(e, TrafficLight) and e.state == "red":
                    continue  # expert never reaches it; model-driven ego may
                s.entities.remove(e)
            if isinstance(e, StopSign):
                if e.distance <= STOP_MARGIN + 1.5 and s.ego.speed < 0.5:
                    self._stop_hold += 1
                    if self._stop_hold >= STOP_SIGN_HOLD:
                        s.entities.remove(e)  # stop satisfied, proceed

        if s.intersection is not None:
            s.intersection.distance = max(0.0, s.intersection.distance - advance)
            if s.intersection.distance <= ENTRY_DISTANCE and \
                    self.entered_tick is None:
                self.entered_tick = self.tick

        self.tick += 1
