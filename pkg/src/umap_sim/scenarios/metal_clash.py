"""Two-team combat between heterogeneous car/drone rosters.

Laser cars are fast close-range ground attackers, missile cars slower
long-range units that can hit air, and support drones fragile fliers that
either attack weakly or repair allies. A destroyed unit costs its team 0.05
and pays the opposing team 0.1; the side with more total health remaining at
the end wins outright (+1 / -1, ties punish both sides).
"""

from __future__ import annotations

from typing import Mapping

from ..events import EventKind
from ..perception import ObservationSpec, Sphere
from ..world import HP_SCALE, AgentKind, Command, World
from .base import MOVE_DIRS, Scenario, dist2, move_command, unit_toward

IDLE, MOVE_N, MOVE_E, MOVE_S, MOVE_W = 0, 1, 2, 3, 4
ATTACK_NEAREST, ATTACK_WEAKEST, FLEE, TOGGLE_PURSUE = 5, 6, 7, 8
HEAL = 9  # support drones only

REWARD_UNIT = 0.05  # the reward ledger's quantum: kill = +2 units, loss = -1
WIN_UNITS = 20

LASER_CAR = AgentKind(
    name="laser_car",
    kind_index=0,
    max_speed=800.0,
    max_hp_units=100 * HP_SCALE,
    n_actions=9,
    obs_spec=ObservationSpec(n_ally=5, n_foe=5, feature_dim=20, range=2000.0),
    shape=Sphere(2000.0),
    attack_power_units=1 * HP_SCALE,
    attack_range=500.0,
    can_attack_ground=True,
)

MISSILE_CAR = AgentKind(
    name="missile_car",
    kind_index=1,
    max_speed=500.0,
    max_hp_units=150 * HP_SCALE,
    n_actions=9,
    obs_spec=ObservationSpec(n_ally=8, n_foe=8, feature_dim=20, range=2500.0),
    shape=Sphere(2500.0),
    attack_power_units=1 * HP_SCALE,
    attack_range=1000.0,
    can_attack_ground=True,
    can_attack_air=True,
)

SUPPORT_DRONE = AgentKind(
    name="support_drone",
    kind_index=2,
    max_speed=1000.0,
    max_hp_units=50 * HP_SCALE,
    n_actions=10,
    obs_spec=ObservationSpec(n_ally=10, n_foe=10, feature_dim=23, range=2500.0),
    shape=Sphere(2500.0),
    attack_power_units=1,  # 1/6 hp per strike
    attack_range=1700.0,
    can_attack_ground=True,
    can_attack_air=True,
    heal_units=1 * HP_SCALE,
    support_range=1500.0,
    is_air=True,
    altitude=500.0,
)


class MetalClash(Scenario):
    name = "metal_clash"

    def kinds(self) -> dict[str, AgentKind]:
        return {
            "laser_car": LASER_CAR,
            "missile_car": MISSILE_CAR,
            "support_drone": SUPPORT_DRONE,
        }

    # -- actions ---------------------------------------------------------

    def decode(self, world: World, actions: Mapping[int, int]) -> dict[int, Command]:
        matrix = self.perception_matrix(world)
        commands: dict[int, Command] = {}
        for agent in world.agents:
            if not agent.alive:
                continue
            action = actions[agent.agent_id]
            pursue = agent.scratch.setdefault("pursue", True)
            if action == IDLE:
                cmd = Command()
            elif action in MOVE_DIRS:
                cmd = move_command(agent, MOVE_DIRS[action])
            elif action == ATTACK_NEAREST:
                cmd = self._attack(world, matrix, agent, pursue, weakest=False)
            elif action == ATTACK_WEAKEST:
                cmd = self._attack(world, matrix, agent, pursue, weakest=True)
            elif action == FLEE:
                cmd = self._flee(world, matrix, agent)
            elif action == TOGGLE_PURSUE:
                agent.scratch["pursue"] = not pursue
                cmd = Command()
            elif action == HEAL and agent.kind.heal_units > 0:
                cmd = self._heal(world, agent)
            else:
                cmd = Command()  # illegal specials resolve to no-op
            commands[agent.agent_id] = cmd
        return commands

    def _can_hit(self, attacker, target) -> bool:
        if target.kind.is_air:
            return attacker.kind.can_attack_air
        return attacker.kind.can_attack_ground

    def _attack(self, world, matrix, agent, pursue: bool, weakest: bool) -> Command:
        candidates = [
            (dist2(agent.position, foe.position), foe.agent_id, foe)
            for foe in world.agents
            if foe.team_id != agent.team_id
            and matrix.bits[agent.agent_id, foe.agent_id]
            and self._can_hit(agent, foe)
        ]
        if not candidates:
            return Command()
        rng2 = agent.kind.attack_range * agent.kind.attack_range
        in_range = [c for c in candidates if c[0] <= rng2]
        if weakest and in_range:
            d2, fid, foe = min(in_range, key=lambda c: (c[2].hp_units, c[0], c[1]))
        elif in_range:
            d2, fid, foe = min(in_range)
        else:
            if not pursue:
                return Command()
            d2, fid, foe = min(candidates)
            return Command(velocity=_run_at(agent, foe.position))
        return Command(attack_target=fid, damage_units=agent.kind.attack_power_units)

    def _flee(self, world, matrix, agent) -> Command:
        threats = [
            (dist2(agent.position, foe.position), foe.agent_id, foe)
            for foe in world.agents
            if foe.team_id != agent.team_id and matrix.bits[agent.agent_id, foe.agent_id]
        ]
        if not threats:
            return Command()
        _, _, foe = min(threats)
        away = unit_toward(foe.position, agent.position)
        s = agent.kind.max_speed
        return Command(velocity=(away[0] * s, away[1] * s, 0.0))

    def _heal(self, world, agent) -> Command:
        sr2 = agent.kind.support_range * agent.kind.support_range
        hurt = [
            (ally.hp_units, ally.agent_id)
            for ally in world.agents
            if ally.alive
            and ally.team_id == agent.team_id
            and ally.agent_id != agent.agent_id
            and ally.hp_units < ally.kind.max_hp_units
            and dist2(agent.position, ally.position) <= sr2
        ]
        if not hurt:
            return Command()
        _, target = min(hurt)
        return Command(heal_target=target, heal_units=agent.kind.heal_units)

    # -- interactions ------------------------------------------------------

    def on_step_end(self, world: World, commands: Mapping[int, Command]) -> None:
        self.apply_scheduled_attacks(world, commands)
        self.apply_scheduled_heals(world, commands)

    def check_done(self, world: World) -> bool:
        return any(total == 0 for total in self._team_hp(world).values())

    def _team_hp(self, world: World) -> dict[int, int]:
        totals = {team: 0 for team in world.teams}
        for agent in world.agents:
            totals[agent.team_id] += agent.hp_units
        return totals

    # -- rewards -------------------------------------------------------------

    def step_rewards(self, world: World, events) -> dict[int, float]:
        destroyed = [e for e in events if e.kind is EventKind.AGENT_DESTROYED]
        values = {}
        for team in world.teams:
            own = sum(1 for e in destroyed if world.team_of(e.subject_id) == team)
            foe = sum(1 for e in destroyed if world.team_of(e.subject_id) != team)
            values[team] = (2 * foe - own) * REWARD_UNIT
        return values

    def terminal_rewards(self, world: World) -> dict[int, float]:
        winners = self.win_teams(world)
        return {
            team: (WIN_UNITS if team in winners else -WIN_UNITS) * REWARD_UNIT
            for team in world.teams
        }

    def win_teams(self, world: World) -> set[int]:
        totals = self._team_hp(world)
        best = max(totals.values())
        leaders = [t for t, v in totals.items() if v == best]
        return {leaders[0]} if len(leaders) == 1 else set()


def _run_at(agent, target_position) -> tuple[float, float, float]:
    d = unit_toward(agent.position, target_position)
    s = agent.kind.max_speed
    return (d[0] * s, d[1] * s, 0.0)
