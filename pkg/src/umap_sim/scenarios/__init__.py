from .base import Scenario, win_rate
from .flag_capture import FlagCapture
from .maps import BUILTIN_MAPS, Landmark, MapSpec, lookup_map, register_map
from .metal_clash import MetalClash
from .monster_crisis import MonsterCrisis
from .navigation_game import NavigationGame
from .registry import (
    SCENARIOS,
    TaskSpec,
    TeamSpec,
    make_world,
    register_task,
    register_tasks_file,
    registry_lookup,
    registry_names,
)

__all__ = [
    "Scenario",
    "MetalClash",
    "MonsterCrisis",
    "FlagCapture",
    "NavigationGame",
    "MapSpec",
    "Landmark",
    "BUILTIN_MAPS",
    "lookup_map",
    "register_map",
    "SCENARIOS",
    "TaskSpec",
    "TeamSpec",
    "make_world",
    "register_task",
    "register_tasks_file",
    "registry_lookup",
    "registry_names",
    "win_rate",
]
