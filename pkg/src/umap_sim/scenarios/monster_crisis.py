"""Cooperative monster hunt with a strictly sparse team reward.

Mushroom agents must bring down one stationary monster by ramming it. The
whole team is paid exactly 1.0 apiece at the moment the monster dies and
nothing in any other situation, which makes the cumulative episode reward
either 0 or the team size.
"""

from __future__ import annotations

from typing import Mapping

from ..events import EventKind
from ..perception import ObservationSpec, Sphere
from ..rng import SplitMix64
from ..world import HP_SCALE, AgentKind, Command, EntityState, World
from .base import MOVE_DIRS, Scenario, horizontal_dist2, move_command, unit_toward

STAY, MOVE_N, MOVE_E, MOVE_S, MOVE_W, MAINTAIN, COLLIDE = 0, 1, 2, 3, 4, 5, 6

#: Center-to-center distance at which a ramming mushroom damages the monster.
CONTACT_RANGE = 400.0
MONSTER_RADIUS = 300.0

MUSHROOM = AgentKind(
    name="mushroom",
    kind_index=0,
    max_speed=400.0,
    max_hp_units=100 * HP_SCALE,
    n_actions=7,
    obs_spec=ObservationSpec(n_ally=7, n_foe=1, feature_dim=20, range=2500.0),
    shape=Sphere(2500.0),
    attack_power_units=1 * HP_SCALE,
    attack_range=CONTACT_RANGE,
)


class MonsterCrisis(Scenario):
    name = "monster_crisis"

    def kinds(self) -> dict[str, AgentKind]:
        return {"mushroom": MUSHROOM}

    def build_entities(self, world: World, rng: SplitMix64) -> None:
        hp = int(self.overrides.get("monster_hp", 400))
        monster = world.spawn_entity(
            "monster",
            world.map.bounds.center,
            extent=(MONSTER_RADIUS, MONSTER_RADIUS, MONSTER_RADIUS),
        )
        monster.scalars.update(
            {
                "hp_units": hp * HP_SCALE,
                "max_hp_units": hp * HP_SCALE,
                "hp": float(hp),
                "max_hp": float(hp),
            }
        )

    def entity_kind_index(self, kind: str) -> int:
        return 1  # monster slot in the kind one-hot

    def entity_candidates(self, world: World, observer) -> list[EntityState]:
        monster = world.entity_by_kind("monster")
        if monster is not None and self.entity_visible(world, observer, monster):
            return [monster]
        return []

    # -- actions -----------------------------------------------------------

    def decode(self, world: World, actions: Mapping[int, int]) -> dict[int, Command]:
        monster = world.entity_by_kind("monster")
        commands: dict[int, Command] = {}
        for agent in world.agents:
            if not agent.alive:
                continue
            action = actions[agent.agent_id]
            if action == MAINTAIN:
                action = agent.scratch.get("last_resolved", STAY)
            else:
                agent.scratch["last_resolved"] = action
            if action == STAY:
                cmd = Command()
            elif action in MOVE_DIRS:
                cmd = move_command(agent, MOVE_DIRS[action])
            elif action == COLLIDE:
                cmd = self._collide(agent, monster)
            else:
                cmd = Command()
            commands[agent.agent_id] = cmd
        return commands

    def _collide(self, agent, monster) -> Command:
        if monster is None or monster.scalars["hp_units"] <= 0:
            return Command()
        d = unit_toward(agent.position, monster.position)
        s = agent.kind.max_speed
        cmd = Command(velocity=(d[0] * s, d[1] * s, 0.0))
        if horizontal_dist2(agent.position, monster.position) <= CONTACT_RANGE * CONTACT_RANGE:
            cmd.attack_target = monster.entity_id
            cmd.damage_units = agent.kind.attack_power_units
        return cmd

    # -- interactions ----------------------------------------------------

    def on_step_end(self, world: World, commands: Mapping[int, Command]) -> None:
        monster = world.entity_by_kind("monster")
        if monster is None or monster.scalars["hp_units"] <= 0:
            return
        for aid, cmd in sorted(commands.items()):
            if cmd.attack_target != monster.entity_id or cmd.damage_units <= 0:
                continue
            if not world.agent(aid).alive:
                continue
            remaining = monster.scalars["hp_units"]
            applied = min(cmd.damage_units, remaining)
            if applied <= 0:
                continue
            monster.scalars["hp_units"] = remaining - applied
            monster.scalars["hp"] = monster.scalars["hp_units"] / HP_SCALE
            world.emit(EventKind.ATTACK_LANDED, aid, monster.entity_id, applied / HP_SCALE)
        if monster.scalars["hp_units"] == 0:
            world.emit(EventKind.MONSTER_KILLED, monster.entity_id)

    def check_done(self, world: World) -> bool:
        monster = world.entity_by_kind("monster")
        return monster is not None and monster.scalars["hp_units"] == 0

    # -- rewards -----------------------------------------------------------

    def step_rewards(self, world: World, events) -> dict[int, float]:
        if any(e.kind is EventKind.MONSTER_KILLED for e in events):
            return {team: 1.0 for team in world.teams}
        return {team: 0.0 for team in world.teams}

    def win_teams(self, world: World) -> set[int]:
        return set(world.teams) if self.check_done(world) else set()
