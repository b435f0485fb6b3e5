"""Synthetic driving world: scenes, expert driver, rendering, datasets."""

from .advice import advice_for, all_template_strings, template_vocabulary
from .dataset import Dataset, DatasetError, read_dataset, write_dataset
from .dynamics import World, braking_envelope_kmh, expert_policy
from .episodes import Episode, EpisodeMeta, generate_episode
from .render import entity_bboxes, render
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
    WorldConfigError,
)

__all__ = [
    "advice_for",
    "all_template_strings",
    "template_vocabulary",
    "Dataset",
    "DatasetError",
    "read_dataset",
    "write_dataset",
    "World",
    "braking_envelope_kmh",
    "expert_policy",
    "Episode",
    "EpisodeMeta",
    "generate_episode",
    "entity_bboxes",
    "render",
    "ConstructionCones",
    "EgoState",
    "Intersection",
    "ParkedCar",
    "Pedestrian",
    "Scene",
    "StopSign",
    "TrafficLight",
    "WorldConfig",
    "WorldConfigError",
]
