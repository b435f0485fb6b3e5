"""Templated advice for generated episodes.

Goal advice is imperative ("turn left at the intersection"), stimulus
advice is declarative present tense ("there is a pedestrian crossing the
street").  Templates form a closed vocabulary, so a tokenizer built from
:func:`template_vocabulary` covers every generated string.
"""

from __future__ import annotations

import re

import numpy as np

_TURN_GOAL = {
    "left": (
        "turn left at the intersection",
        "make a left turn at the intersection",
        "take a left at the next intersection",
    ),
    "right": (
        "turn right at the intersection",
        "make a right turn at the intersection",
        "take a right at the next intersection",
    ),
    "straight": (
        "go straight through the intersection",
        "continue straight through the intersection",
        "drive straight across the intersection",
    ),
}

_GOAL = {
    "intersection_slow": (
        "slow down before the intersection",
        "approach the intersection slowly",
    ),
    "red_light": (
        "stop at the red light",
        "slow down and stop at the light",
        "come to a stop at the traffic light",
    ),
    "green_light": (
        "keep going through the green light",
        "maintain speed past the traffic light",
        "drive on while the light is green",
    ),
    "stop_sign": (
        "stop at the stop sign",
        "come to a full stop at the sign",
        "slow down and stop at the stop sign",
    ),
    "ped_crossing": (
        "stop for the pedestrian",
        "wait for the pedestrian to cross",
        "slow down and stop for the person crossing",
    ),
    "ped_waiting": (
        "keep driving past the crosswalk",
        "maintain your speed past the crosswalk",
        "continue along the road",
    ),
    "parked_car": (
        "slow down and pass the parked car",
        "drive carefully past the parked car",
        "ease past the parked car",
    ),
    "cones": (
        "slow down for the construction zone",
        "drive slowly past the cones",
        "ease through the construction area",
    ),
    "generic": (
        "keep your lane",
        "stay in the lane",
        "hold a steady speed",
        "keep the car centered in the lane",
        "drive along the road",
    ),
}

_STIMULUS = {
    "intersection": (
        "there is an intersection ahead",
        "the road meets an intersection ahead",
        "an intersection is coming up",
    ),
    "red_light": (
        "the traffic light is red",
        "there is a red light ahead",
        "the light ahead is red",
    ),
    "green_light": (
        "the traffic light is green",
        "there is a green light ahead",
        "the light ahead is green",
    ),
    "stop_sign": (
        "there is a stop sign ahead",
        "a stop sign stands at the roadside",
        "there is a stop sign on the right",
    ),
    "ped_crossing": (
        "there is a pedestrian crossing the street",
        "a pedestrian is crossing the road ahead",
        "a person is walking across the crosswalk",
    ),
    "ped_waiting": (
        "a pedestrian is waiting at the curb",
        "there is a pedestrian standing on the sidewalk",
        "a person stands beside the crosswalk",
    ),
    "parked_car_left": (
        "there is a car parked on the left side",
        "a parked car sits on the left",
    ),
    "parked_car_right": (
        "there is a car parked on the right side",
        "a parked car sits on the right",
    ),
    "cones": (
        "there are construction cones on the road",
        "the lane is blocked by cones ahead",
        "construction cones stand in the lane",
    ),
    "generic": (
        "the road ahead is clear",
        "the lane markings are visible",
        "there is light traffic on the road",
        "the road runs straight ahead",
        "the street is quiet",
    ),
}


def _goal_keys(scenario: str, route_intent: str) -> list[str]:
    if scenario == "intersection":
        return ["turn", "intersection_slow"]
    if scenario in _GOAL:
        return [scenario]
    return []


def _stimulus_keys(scenario: str, parked_side: str | None) -> list[str]:
    if scenario == "intersection":
        return ["intersection"]
    if scenario == "parked_car":
        return [f"parked_car_{parked_side or 'right'}"]
    if scenario in _STIMULUS:
        return [scenario]
    return []


def advice_for(scenario: str, route_intent: str, parked_side: str | None,
               rng: np.random.Generator) -> tuple[list[str], list[str]]:
    """(goal_advice, stimulus_advice): 3-5 strings each, paraphrases by rng."""
    goal: list[str] = []
    for key in _goal_keys(scenario, route_intent):
        pool = _TURN_GOAL[route_intent] if key == "turn" else _GOAL[key]
        goal.append(str(rng.choice(pool)))
    stim: list[str] = []
    for key in _stimulus_keys(scenario, parked_side):
        stim.append(str(rng.choice(_STIMULUS[key])))

    want_goal = int(rng.integers(3, 6))
    want_stim = int(rng.integers(3, 6))
    goal_fill = list(rng.permutation(_GOAL["generic"]))
    stim_fill = list(rng.permutation(_STIMULUS["generic"]))
    while len(goal) < want_goal and goal_fill:
        goal.append(str(goal_fill.pop()))
    while len(stim) < want_stim and stim_fill:
        stim.append(str(stim_fill.pop()))
    return goal, stim


def all_template_strings() -> list[str]:
    out: list[str] = []
    for pools in (_TURN_GOAL, _GOAL, _STIMULUS):
        for variants in pools.values():
            out.extend(variants)
    return sorted(set(out))


def template_vocabulary() -> list[str]:
    """Every word type any template can emit, sorted."""
    words: set[str] = set()
    for s in all_template_strings():
        words.update(re.findall(r"[a-z]+", s.lower()))
    return sorted(words)
