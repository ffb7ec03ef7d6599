"""Scenario contract: a family of tasks sharing rules and rewards.

A scenario supplies episode initialization, action decoding, per-frame and
end-of-step interaction rules, the event-driven reward function, termination
and win determination. Everything here is a pure transformation of the world
it is handed; scenarios hold no mutable state of their own between calls
(per-episode state lives in world.scenario_state / agent scratch dicts).
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Mapping, Optional, Sequence

from ..events import EventKind
from ..perception import (
    ObservedTarget,
    PerceptionMatrix,
    assemble_observation,
    build_matrix,
    visible,
)
from ..rng import SplitMix64
from ..world import AgentKind, AgentState, Command, EntityState, World


def unit_toward(src: Sequence[float], dst: Sequence[float]) -> tuple[float, float, float]:
    """Horizontal unit vector from src toward dst (zero if coincident)."""
    dx = dst[0] - src[0]
    dy = dst[1] - src[1]
    norm = math.sqrt(dx * dx + dy * dy)
    if norm == 0.0:
        return (0.0, 0.0, 0.0)
    return (dx / norm, dy / norm, 0.0)


def horizontal_dist2(a: Sequence[float], b: Sequence[float]) -> float:
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    return dx * dx + dy * dy


def dist2(a: Sequence[float], b: Sequence[float]) -> float:
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    dz = b[2] - a[2]
    return dx * dx + dy * dy + dz * dz


def win_rate(outcomes: Sequence[bool]) -> float:
    """Fraction of episodes won; a tie counts as a non-win."""
    if not outcomes:
        raise ValueError("win_rate needs at least one episode")
    return sum(1 for won in outcomes if won) / len(outcomes)


#: Compass move directions shared by the discrete action sets (N, E, S, W).
MOVE_DIRS = {
    1: (0.0, 1.0, 0.0),
    2: (1.0, 0.0, 0.0),
    3: (0.0, -1.0, 0.0),
    4: (-1.0, 0.0, 0.0),
}


def move_command(agent: AgentState, direction: Sequence[float]) -> Command:
    s = agent.kind.max_speed
    return Command(velocity=(direction[0] * s, direction[1] * s, direction[2] * s))


class Scenario(ABC):
    """Rule family. Subclasses define agent kinds, actions and rewards."""

    name: str = ""
    occlusion: bool = False

    def __init__(self, overrides: Optional[dict] = None):
        self.overrides = dict(overrides or {})

    # -- static description -------------------------------------------

    @abstractmethod
    def kinds(self) -> dict[str, AgentKind]:
        """All agent kinds this scenario can spawn, by name."""

    def kind(self, name: str) -> AgentKind:
        try:
            return self.kinds()[name]
        except KeyError:
            raise KeyError(f"scenario {self.name}: unknown agent kind {name!r}") from None

    # -- episode lifecycle ---------------------------------------------

    def build(self, world: World, rng: SplitMix64) -> None:
        """Default roster spawner: team-major, roster order, jittered spawn points."""
        kinds = self.kinds()
        for team in world.team_specs:
            for kind_name, count in team.roster:
                if kind_name not in kinds:
                    raise KeyError(f"scenario {self.name}: unknown agent kind {kind_name!r}")
                for _ in range(count):
                    pos = world.map.spawn_point(team.team_id, rng)
                    kind = kinds[kind_name]
                    if kind.is_air:
                        pos = (pos[0], pos[1], kind.altitude)
                    world.spawn_agent(team.team_id, kind, pos)
        self.build_entities(world, rng)

    def build_entities(self, world: World, rng: SplitMix64) -> None:
        """Hook for scenario entities (flag, monster, landmarks...)."""

    # -- stepping hooks --------------------------------------------------

    @abstractmethod
    def decode(self, world: World, actions: Mapping[int, int]) -> dict[int, Command]:
        """Latch one Command per living agent from the joint action."""

    def on_frame(self, world: World) -> None:
        """Per-frame rules (timers, continuous conditions)."""

    def on_step_end(self, world: World, commands: Mapping[int, Command]) -> None:
        """End-of-step interactions (damage, heals, possession changes)."""

    @abstractmethod
    def check_done(self, world: World) -> bool:
        """Natural termination (independent of the step limit)."""

    # -- rewards ----------------------------------------------------------

    @abstractmethod
    def step_rewards(self, world: World, events) -> dict[int, float]:
        """Per-team reward value for this step, broadcast to every member."""

    def terminal_rewards(self, world: World) -> dict[int, float]:
        return {}

    def win_teams(self, world: World) -> set[int]:
        return set()

    def public_state(self, world: World) -> dict:
        """JSON-ready scenario state exposed in snapshots."""
        return dict(world.scenario_state)

    # -- shared combat helpers ---------------------------------------------

    def apply_scheduled_attacks(self, world: World, commands: Mapping[int, Command]) -> None:
        """Simultaneous damage resolution at the step's final frame.

        All scheduled attacks land before any death is decided, so two agents
        that kill each other in the same frame both die; overkill is clamped.
        """
        attacks = [
            (aid, cmd)
            for aid, cmd in sorted(commands.items())
            if cmd.attack_target is not None and cmd.damage_units > 0
        ]
        was_alive = {a.agent_id: a.alive for a in world.agents}
        for aid, cmd in attacks:
            target = world.agent(cmd.attack_target)
            if not was_alive.get(target.agent_id, False):
                continue
            before = target.hp_units
            target.hp_units = max(0, before - cmd.damage_units)
            world.emit(
                EventKind.ATTACK_LANDED, aid, target.agent_id, (before - target.hp_units) / 6.0
            )
        for agent in world.agents:
            if was_alive[agent.agent_id] and agent.hp_units == 0:
                agent.alive = False
                agent.velocity = [0.0, 0.0, 0.0]
                world.emit(EventKind.AGENT_DESTROYED, agent.agent_id)

    def apply_scheduled_heals(self, world: World, commands: Mapping[int, Command]) -> None:
        """Heals land after deaths are decided; they never revive and never
        push a target above max health."""
        for aid, cmd in sorted(commands.items()):
            if cmd.heal_target is None or cmd.heal_units <= 0:
                continue
            healer = world.agent(aid)
            target = world.agent(cmd.heal_target)
            if not healer.alive or not target.alive:
                continue
            healed = min(cmd.heal_units, target.kind.max_hp_units - target.hp_units)
            if healed > 0:
                target.hp_units += healed
                world.emit(EventKind.HEAL_APPLIED, aid, target.agent_id, healed / 6.0)

    # -- observation pipeline ----------------------------------------------

    def perception_shapes(self, world: World):
        return [a.kind.shape for a in world.agents]

    def perception_matrix(self, world: World) -> PerceptionMatrix:
        return build_matrix(
            world.agents,
            self.perception_shapes(world),
            occlusion=self.occlusion,
            obstacles=world.map.obstacles,
        )

    def observed_target(self, thing) -> ObservedTarget:
        if isinstance(thing, AgentState):
            return ObservedTarget(
                uid=thing.agent_id,
                team_id=thing.team_id,
                kind_index=thing.kind.kind_index,
                position=tuple(thing.position),
                velocity=tuple(thing.velocity),
                heading=tuple(thing.heading),
                hp_ratio=thing.hp_units / thing.kind.max_hp_units,
                max_speed=thing.kind.max_speed,
                attack_range=thing.kind.attack_range,
                heal_capacity=thing.kind.heal_units / 6.0,
                support_range=thing.kind.support_range,
            )
        return self.entity_target(thing)

    def entity_target(self, entity: EntityState) -> ObservedTarget:
        max_hp = entity.scalars.get("max_hp", 0.0)
        hp = entity.scalars.get("hp", max_hp)
        return ObservedTarget(
            uid=entity.entity_id,
            team_id=-1,
            kind_index=self.entity_kind_index(entity.kind),
            position=tuple(entity.position),
            velocity=(0.0, 0.0, 0.0),
            heading=(0.0, 0.0, 0.0),
            hp_ratio=hp / max_hp if max_hp else 0.0,
            max_speed=0.0,
            attack_range=0.0,
        )

    def entity_kind_index(self, kind: str) -> int:
        return 2

    def entity_candidates(self, world: World, observer: AgentState) -> list[EntityState]:
        """Entities eligible for the observer's foe slots (visibility already
        decided here; default none)."""
        return []

    def observe(self, world: World, matrix: Optional[PerceptionMatrix] = None) -> dict[int, list]:
        """Observation vectors for every agent (dead agents: all-zero)."""
        if matrix is None:
            matrix = self.perception_matrix(world)
        out: dict[int, list] = {}
        for agent in world.agents:
            spec = agent.kind.obs_spec
            if not agent.alive:
                out[agent.agent_id] = [0.0] * spec.total_dim
                continue
            allies = [
                self.observed_target(other)
                for other in world.agents
                if other.team_id == agent.team_id
                and other.agent_id != agent.agent_id
                and matrix.bits[agent.agent_id, other.agent_id]
            ]
            foes = [
                self.observed_target(other)
                for other in world.agents
                if other.team_id != agent.team_id and matrix.bits[agent.agent_id, other.agent_id]
            ]
            foes.extend(self.observed_target(e) for e in self.entity_candidates(world, agent))
            vec = assemble_observation(
                agent.agent_id,
                tuple(agent.position),
                spec,
                self.observed_target(agent),
                allies,
                foes,
            )
            out[agent.agent_id] = vec.tolist()
        return out

    def entity_visible(self, world: World, observer: AgentState, entity: EntityState) -> bool:
        return visible(
            tuple(observer.position),
            tuple(observer.heading),
            observer.kind.shape,
            tuple(entity.position),
        )
