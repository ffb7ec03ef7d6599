"""Shared test fixtures: engineered tasks and worlds with hand-placed agents."""

from __future__ import annotations

from umap_sim.scenarios import TaskSpec, TeamSpec, make_world
from umap_sim.timeflow import TimeConfig, UNPACED


def unpaced(decision_interval=0.5, frame_rate=30.0) -> TimeConfig:
    return TimeConfig(decision_interval, frame_rate, UNPACED)


def duel_task(max_steps=125, kinds=(("laser_car", 1), ("laser_car", 1))) -> TaskSpec:
    """Two single-agent metal clash teams (hand-positioned in tests)."""
    return TaskSpec(
        name="duel",
        scenario="metal_clash",
        map_id="arena_10k",
        max_episode_steps=max_steps,
        teams=(
            TeamSpec(0, ((kinds[0][0], kinds[0][1]),)),
            TeamSpec(1, ((kinds[1][0], kinds[1][1]),), scripted=True),
        ),
    )


def custom_metal_task(roster0, roster1, max_steps=125, name="custom_mc", map_id="arena_10k") -> TaskSpec:
    return TaskSpec(
        name=name,
        scenario="metal_clash",
        map_id=map_id,
        max_episode_steps=max_steps,
        teams=(TeamSpec(0, tuple(roster0)), TeamSpec(1, tuple(roster1), scripted=True)),
    )


def place(world, agent_id, x, y, z=None):
    agent = world.agent(agent_id)
    agent.position[0] = float(x)
    agent.position[1] = float(y)
    if z is not None:
        agent.position[2] = float(z)
    return agent


def world_for(task, **kwargs):
    kwargs.setdefault("time_config", unpaced())
    return make_world(task, **kwargs)
