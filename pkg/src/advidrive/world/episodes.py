"""Episode generation: roll the expert through a world and record it."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .advice import advice_for
from .dynamics import World
from .render import render
from .scene import ParkedCar, WorldConfig


@dataclass
class EpisodeMeta:
    """Generation-side facts used by evaluation and advice; not pixels."""

    scenario: str
    parked_side: str | None = None
    turn_window: tuple[int, int] | None = None  # [start, end) ticks of the turn
    has_intersection: bool = False


@dataclass
class Episode:
    frames: np.ndarray             # (T, H, W, 3) uint8
    controls: np.ndarray           # (T, 2) float64: speed km/h, steering deg
    goal_advice: list[str]
    stimulus_advice: list[str]
    route_intent: str              # "left" | "straight" | "right"
    seed: int
    rate_hz: int = 10
    meta: EpisodeMeta = field(default_factory=lambda: EpisodeMeta("clear"))

    def __len__(self) -> int:
        return len(self.frames)


def generate_episode(seed: int, config: WorldConfig,
                     route_intent: str | None = None) -> Episode:
    """Deterministic episode from (seed, config).

    route_intent overrides the drawn intent for diagnostics; the random
    stream is consumed identically either way, so frames are byte-equal
    across overrides.
    """
    config.validate()
    world = World(seed, config, route_intent=route_intent)
    frames: list[np.ndarray] = []
    controls: list[tuple[float, float]] = []
    while not world.terminal:
        scene = world.scene
        frames.append(render(scene, config))
        action = world.expert_action()
        controls.append(action)
        world.step(*action)

    t_len = len(frames)
    if not 20 <= t_len <= 200:
        raise AssertionError(f"episode length {t_len} out of range")

    parked_side = None
    for e in world.scene.entities:
        if isinstance(e, ParkedCar):
            parked_side = e.side
    if world.scenario == "parked_car" and parked_side is None:
        parked_side = "right"  # the car was passed and removed mid-episode

    turn_window = None
    if world.entered_tick is not None:
        turn_window = (world.entered_tick + 1, t_len)

    adv_rng = np.random.default_rng([int(seed), 0xADC])
    goal, stim = advice_for(world.scenario, world.route_intent, parked_side, adv_rng)

    return Episode(
        frames=np.stack(frames),
        controls=np.asarray(controls, dtype=np.float64),
        goal_advice=goal,
        stimulus_advice=stim,
        route_intent=world.route_intent,
        seed=int(seed),
        rate_hz=config.rate_hz,
        meta=EpisodeMeta(
            scenario=world.scenario,
            parked_side=parked_side,
            turn_window=turn_window,
            has_intersection=world.scenario == "intersection",
        ),
    )
