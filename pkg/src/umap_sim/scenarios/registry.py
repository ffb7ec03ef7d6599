"""Task registry: named, parameterized task records loaded from a data file.

A task binds a scenario to concrete rosters, a map and limits; new tasks are
registrable from data without touching scenario code. Team 0 is the
learnable side by convention; teams flagged `scripted` default to built-in
policies when an experiment config does not bind them explicitly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from ..timeflow import TimeConfig
from ..world import ObjectPool, RosterError, World
from .base import Scenario
from .flag_capture import FlagCapture
from .maps import lookup_map
from .metal_clash import MetalClash
from .monster_crisis import MonsterCrisis
from .navigation_game import NavigationGame

SCENARIOS: dict[str, type[Scenario]] = {
    "metal_clash": MetalClash,
    "monster_crisis": MonsterCrisis,
    "flag_capture": FlagCapture,
    "navigation_game": NavigationGame,
}


@dataclass(frozen=True)
class TeamSpec:
    team_id: int
    roster: tuple[tuple[str, int], ...]
    scripted: bool = False

    @property
    def size(self) -> int:
        return sum(count for _, count in self.roster)


@dataclass(frozen=True)
class TaskSpec:
    name: str
    scenario: str
    map_id: str
    max_episode_steps: int
    teams: tuple[TeamSpec, ...]
    overrides: dict = field(default_factory=dict)
    gamma: float = 0.99
    decision_interval: float = 0.5
    frame_rate: float = 30.0

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise RosterError(f"unknown scenario {self.scenario!r}")
        if self.max_episode_steps <= 0:
            raise RosterError(f"{self.name}: max_episode_steps must be positive")
        if not 0.0 <= self.gamma < 1.0:
            raise RosterError(f"{self.name}: gamma must be in [0, 1)")
        if any(count < 0 for team in self.teams for _, count in team.roster):
            raise RosterError(f"{self.name}: negative roster count")
        learnable = [t for t in self.teams if not t.scripted and t.size > 0]
        if not learnable:
            raise RosterError(f"{self.name}: needs at least one non-empty learnable team")
        kinds = SCENARIOS[self.scenario]({}).kinds()
        for team in self.teams:
            for kind_name, _ in team.roster:
                if kind_name not in kinds:
                    raise RosterError(f"{self.name}: unknown agent kind {kind_name!r}")

    @property
    def n_agents(self) -> int:
        return sum(team.size for team in self.teams)

    def time_config(self, dilation: float = float("inf"), **kwargs) -> TimeConfig:
        """Task time parameters; unpaced by default (pacing is opt-in)."""
        return TimeConfig(
            decision_interval=kwargs.get("decision_interval", self.decision_interval),
            baseline_frame_rate=kwargs.get("frame_rate", self.frame_rate),
            dilation_factor=dilation,
        )

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "scenario": self.scenario,
            "map": self.map_id,
            "max_episode_steps": self.max_episode_steps,
            "gamma": self.gamma,
            "decision_interval": self.decision_interval,
            "frame_rate": self.frame_rate,
            "overrides": self.overrides,
            "teams": [
                {
                    "team": t.team_id,
                    "roster": [[kind, count] for kind, count in t.roster],
                    "scripted": t.scripted,
                }
                for t in self.teams
            ],
        }

    @staticmethod
    def from_json(obj: dict) -> "TaskSpec":
        teams = tuple(
            TeamSpec(
                team_id=t["team"],
                roster=tuple((kind, count) for kind, count in t["roster"]),
                scripted=t.get("scripted", False),
            )
            for t in obj["teams"]
        )
        return TaskSpec(
            name=obj["name"],
            scenario=obj["scenario"],
            map_id=obj["map"],
            max_episode_steps=obj["max_episode_steps"],
            teams=teams,
            overrides=obj.get("overrides", {}),
            gamma=obj.get("gamma", 0.99),
            decision_interval=obj.get("decision_interval", 0.5),
            frame_rate=obj.get("frame_rate", 30.0),
        )


_REGISTRY: dict[str, TaskSpec] = {}


def _load_builtin() -> None:
    data = resources.files("umap_sim.scenarios").joinpath("data/tasks.json").read_text()
    for record in json.loads(data):
        spec = TaskSpec.from_json(record)
        _REGISTRY[spec.name] = spec


def registry_lookup(task_name: str) -> TaskSpec:
    if not _REGISTRY:
        _load_builtin()
    try:
        return _REGISTRY[task_name]
    except KeyError:
        raise KeyError(f"unknown task {task_name!r}; known: {sorted(_REGISTRY)}") from None


def registry_names() -> list[str]:
    if not _REGISTRY:
        _load_builtin()
    return sorted(_REGISTRY)


def register_task(spec: TaskSpec) -> None:
    if not _REGISTRY:
        _load_builtin()
    _REGISTRY[spec.name] = spec


def register_tasks_file(path: str) -> list[str]:
    """Register every task record in a user-supplied JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        records = json.load(fh)
    names = []
    for record in records:
        spec = TaskSpec.from_json(record)
        register_task(spec)
        names.append(spec.name)
    return names


def make_world(
    task: TaskSpec | str,
    time_config: Optional[TimeConfig] = None,
    pool: Optional[ObjectPool] = None,
    wall_clock=None,
    map_id: Optional[str] = None,
) -> World:
    """Instantiate a world for a task (by spec or registry name)."""
    spec = registry_lookup(task) if isinstance(task, str) else task
    scenario = SCENARIOS[spec.scenario](spec.overrides)
    world = World(
        scenario=scenario,
        map_spec=lookup_map(map_id or spec.map_id),
        teams=spec.teams,
        max_episode_steps=spec.max_episode_steps,
        time_config=time_config if time_config is not None else spec.time_config(),
        pool=pool,
        wall_clock=wall_clock,
    )
    world.task_name = spec.name
    world.gamma = spec.gamma
    return world
