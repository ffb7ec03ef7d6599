"""Multi-team flag possession race.

Constant-speed robots (no weapons, conical vision) fight over one stationary
flag. A team takes possession when one of its members is within the pickup
radius and nearest to the flag; possession transfers whenever a rival gets
strictly nearer than the current holder. Holding pays 0.005 per step and the
team with the strictly longest total hold time collects 1.0 at the end.
"""

from __future__ import annotations

import math
from typing import Mapping

from ..events import EventKind
from ..perception import Cone, ObservationSpec
from ..rng import SplitMix64
from ..world import HP_SCALE, AgentKind, Command, EntityState, World
from .base import Scenario, horizontal_dist2

PICKUP_RADIUS = 200.0
HOLD_REWARD = 0.005
WIN_REWARD = 1.0

_S = 0.7071067811865476  # sin/cos of 45 degrees, pinned to one exact double

#: Eight unit headings, 45 degrees apart, counterclockwise from east.
HEADINGS = (
    (1.0, 0.0),
    (_S, _S),
    (0.0, 1.0),
    (-_S, _S),
    (-1.0, 0.0),
    (-_S, -_S),
    (0.0, -1.0),
    (_S, -_S),
)

ROBOT = AgentKind(
    name="robot",
    kind_index=0,
    max_speed=600.0,
    max_hp_units=100 * HP_SCALE,
    n_actions=8,
    obs_spec=ObservationSpec(n_ally=14, n_foe=16, feature_dim=20, range=2000.0),
    shape=Cone(radius=2000.0, half_angle=math.pi / 3),
)


class FlagCapture(Scenario):
    name = "flag_capture"

    def kinds(self) -> dict[str, AgentKind]:
        return {"robot": ROBOT}

    def build_entities(self, world: World, rng: SplitMix64) -> None:
        # possession history rides on the flag itself: the complete state
        # stays factored into agents plus entities
        flag = world.spawn_entity("flag", world.map.bounds.center)
        flag.scalars.update(
            {"holder_id": -1, "holder_team": -1, "hold_steps": {team: 0 for team in world.teams}}
        )

    def entity_kind_index(self, kind: str) -> int:
        return 1

    def entity_candidates(self, world: World, observer) -> list[EntityState]:
        # The flag's position is common knowledge; vision range gates agents only.
        flag = world.entity_by_kind("flag")
        return [flag] if flag is not None else []

    # -- actions -------------------------------------------------------------

    def decode(self, world: World, actions: Mapping[int, int]) -> dict[int, Command]:
        commands: dict[int, Command] = {}
        for agent in world.agents:
            if not agent.alive:
                continue
            hx, hy = HEADINGS[actions[agent.agent_id]]
            s = agent.kind.max_speed
            commands[agent.agent_id] = Command(velocity=(hx * s, hy * s, 0.0))
        return commands

    # -- possession ------------------------------------------------------------

    def on_step_end(self, world: World, commands: Mapping[int, Command]) -> None:
        flag = world.entity_by_kind("flag")
        pickup2 = PICKUP_RADIUS * PICKUP_RADIUS
        contenders = sorted(
            (horizontal_dist2(a.position, flag.position), a.agent_id, a.team_id)
            for a in world.agents
            if a.alive and horizontal_dist2(a.position, flag.position) <= pickup2
        )
        holder = flag.scalars["holder_id"]

        if holder >= 0:
            held_d2 = horizontal_dist2(world.agent(holder).position, flag.position)
            if not world.agent(holder).alive or held_d2 > pickup2:
                world.emit(EventKind.FLAG_DROPPED, holder)
                holder = -1
            elif contenders:
                d2, aid, team = contenders[0]
                if team != flag.scalars["holder_team"] and d2 < held_d2:
                    world.emit(EventKind.FLAG_DROPPED, holder)
                    world.emit(EventKind.FLAG_PICKED_UP, aid)
                    holder = aid

        if holder < 0 and contenders:
            _, aid, _ = contenders[0]
            world.emit(EventKind.FLAG_PICKED_UP, aid)
            holder = aid

        flag.scalars["holder_id"] = holder
        flag.scalars["holder_team"] = world.team_of(holder) if holder >= 0 else -1
        if holder >= 0:
            flag.scalars["hold_steps"][flag.scalars["holder_team"]] += 1

    def check_done(self, world: World) -> bool:
        return False  # episodes run to the step limit

    # -- rewards ---------------------------------------------------------------

    def step_rewards(self, world: World, events) -> dict[int, float]:
        flag = world.entity_by_kind("flag")
        held = flag.scalars["holder_team"] if flag else -1
        return {team: (HOLD_REWARD if team == held else 0.0) for team in world.teams}

    def terminal_rewards(self, world: World) -> dict[int, float]:
        winners = self.win_teams(world)
        return {team: (WIN_REWARD if team in winners else 0.0) for team in world.teams}

    def win_teams(self, world: World) -> set[int]:
        flag = world.entity_by_kind("flag")
        if flag is None:
            return set()
        holds = flag.scalars["hold_steps"]
        best = max(holds.values())
        leaders = [t for t, v in holds.items() if v == best]
        return {leaders[0]} if len(leaders) == 1 and best > 0 else set()

    def public_state(self, world: World) -> dict:
        flag = world.entity_by_kind("flag")
        if flag is None:
            return {"holder_id": -1, "holder_team": -1, "hold_steps": {}}
        return {
            "holder_id": flag.scalars["holder_id"],
            "holder_team": flag.scalars["holder_team"],
            "hold_steps": {str(t): v for t, v in flag.scalars["hold_steps"].items()},
        }
