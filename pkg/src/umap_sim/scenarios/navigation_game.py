"""Two-team zero-sum landmark control with occlusion.

A navigator team (ground + air units) tries to park an air navigator over
either landmark for ten continuous simulation seconds; a keeper team defends.
Nobody deals damage: ground keepers shove air navigators away and ground
navigators shove keepers away (a forced flee lasting one decision step).
The per-step guidance reward is the mean air-navigator distance to the
nearest landmark scaled by 1/10,000, credited negatively to the navigators
and mirrored exactly to the keepers, so team rewards always sum to zero.
"""

from __future__ import annotations

import math
from typing import Mapping

from ..events import EventKind
from ..perception import ObservationSpec, Sphere
from ..rng import SplitMix64
from ..world import HP_SCALE, AgentKind, Command, EntityState, World
from .base import MOVE_DIRS, Scenario, horizontal_dist2, move_command, unit_toward

IDLE, MOVE_N, MOVE_E, MOVE_S, MOVE_W, FLEE, APPROACH = 0, 1, 2, 3, 4, 5, 6

INTERACTION_RANGE = 300.0
HOLD_SECONDS = 10.0
DENSE_SCALE = 10000.0

NAVIGATOR_TEAM = 0
KEEPER_TEAM = 1

GROUND_NAVIGATOR = AgentKind(
    name="ground_navigator",
    kind_index=0,
    max_speed=600.0,
    max_hp_units=100 * HP_SCALE,
    n_actions=7,
    obs_spec=ObservationSpec(n_ally=4, n_foe=4, feature_dim=20, range=2500.0),
    shape=Sphere(2500.0),
)

AIR_NAVIGATOR = AgentKind(
    name="air_navigator",
    kind_index=1,
    max_speed=800.0,
    max_hp_units=100 * HP_SCALE,
    n_actions=7,
    obs_spec=ObservationSpec(n_ally=4, n_foe=4, feature_dim=20, range=3000.0),
    shape=Sphere(3000.0),
    is_air=True,
    altitude=500.0,
)

GROUND_KEEPER = AgentKind(
    name="ground_keeper",
    kind_index=2,
    max_speed=700.0,
    max_hp_units=100 * HP_SCALE,
    n_actions=7,
    obs_spec=ObservationSpec(n_ally=3, n_foe=7, feature_dim=20, range=2500.0),
    shape=Sphere(2500.0),
)


class NavigationGame(Scenario):
    name = "navigation_game"
    occlusion = True  # the arena has walls; vision respects them

    def kinds(self) -> dict[str, AgentKind]:
        return {
            "ground_navigator": GROUND_NAVIGATOR,
            "air_navigator": AIR_NAVIGATOR,
            "ground_keeper": GROUND_KEEPER,
        }

    def build_entities(self, world: World, rng: SplitMix64) -> None:
        if not world.map.landmarks:
            raise ValueError("navigation_game requires a map with landmarks")
        for lm in world.map.landmarks:
            entity = world.spawn_entity("landmark", lm.position, extent=(lm.radius, lm.radius, 0.0))
            entity.scalars["radius"] = lm.radius
        world.scenario_state["nav_won"] = False

    def entity_kind_index(self, kind: str) -> int:
        return 2

    def entity_candidates(self, world: World, observer) -> list[EntityState]:
        # Landmarks are beacons: visible from anywhere, walls included.
        return [e for e in world.entities if e.kind == "landmark"]

    # -- actions ---------------------------------------------------------------

    def decode(self, world: World, actions: Mapping[int, int]) -> dict[int, Command]:
        matrix = self.perception_matrix(world)
        commands: dict[int, Command] = {}
        for agent in world.agents:
            if not agent.alive:
                continue
            flee_from = agent.scratch.pop("flee_from", None)
            if flee_from is not None:
                away = unit_toward(flee_from, agent.position)
                s = agent.kind.max_speed
                commands[agent.agent_id] = Command(velocity=(away[0] * s, away[1] * s, 0.0))
                continue
            action = actions[agent.agent_id]
            if action == IDLE:
                cmd = Command()
            elif action in MOVE_DIRS:
                cmd = move_command(agent, MOVE_DIRS[action])
            elif action == FLEE:
                cmd = self._flee(world, matrix, agent)
            elif action == APPROACH:
                cmd = self._approach(world, matrix, agent)
            else:
                cmd = Command()
            commands[agent.agent_id] = cmd
        return commands

    def _flee(self, world, matrix, agent) -> Command:
        threats = [
            (horizontal_dist2(agent.position, foe.position), foe.agent_id, foe)
            for foe in world.agents
            if foe.team_id != agent.team_id and matrix.bits[agent.agent_id, foe.agent_id]
        ]
        if not threats:
            return Command()
        _, _, foe = min(threats, key=lambda t: (t[0], t[1]))
        away = unit_toward(foe.position, agent.position)
        s = agent.kind.max_speed
        return Command(velocity=(away[0] * s, away[1] * s, 0.0))

    def _approach(self, world, matrix, agent) -> Command:
        if agent.team_id == KEEPER_TEAM:
            targets = [
                (horizontal_dist2(agent.position, foe.position), foe.agent_id, foe.position)
                for foe in world.agents
                if foe.team_id != agent.team_id
                and foe.kind.is_air
                and matrix.bits[agent.agent_id, foe.agent_id]
            ]
            if targets:
                _, _, pos = min(targets, key=lambda t: (t[0], t[1]))
                return self._move_toward(agent, pos)
        goal = self._nearest_landmark(world, agent.position)
        return self._move_toward(agent, goal)

    def _move_toward(self, agent, position) -> Command:
        d = unit_toward(agent.position, position)
        s = agent.kind.max_speed
        return Command(velocity=(d[0] * s, d[1] * s, 0.0))

    def _nearest_landmark(self, world, position):
        best = min(
            (horizontal_dist2(position, e.position), e.entity_id, e.position)
            for e in world.entities
            if e.kind == "landmark"
        )
        return best[2]

    # -- per-frame hold timers ---------------------------------------------------

    def on_frame(self, world: World) -> None:
        required = int(round(HOLD_SECONDS * world.time_config.baseline_frame_rate))
        for agent in world.agents:
            if not agent.alive or not agent.kind.is_air or agent.team_id != NAVIGATOR_TEAM:
                continue
            over = any(
                horizontal_dist2(agent.position, e.position) <= e.scalars["radius"] ** 2
                for e in world.entities
                if e.kind == "landmark"
            )
            frames = agent.scratch.get("hold_frames", 0) + 1 if over else 0
            agent.scratch["hold_frames"] = frames
            if frames == required:
                world.emit(EventKind.LANDMARK_HOLD_COMPLETED, agent.agent_id)
                world.scenario_state["nav_won"] = True

    def on_step_end(self, world: World, commands: Mapping[int, Command]) -> None:
        keepers = [a for a in world.agents if a.alive and a.team_id == KEEPER_TEAM]
        air_navs = [
            a for a in world.agents if a.alive and a.team_id == NAVIGATOR_TEAM and a.kind.is_air
        ]
        ground_navs = [
            a for a in world.agents if a.alive and a.team_id == NAVIGATOR_TEAM and not a.kind.is_air
        ]
        r2 = INTERACTION_RANGE * INTERACTION_RANGE
        # Simultaneous, from positions at the final frame: keepers shove air
        # navigators; ground navigators shove keepers. A shove forces a flee
        # move next step and breaks any landmark hold in progress.
        for keeper in keepers:
            for nav in air_navs:
                if horizontal_dist2(keeper.position, nav.position) <= r2:
                    nav.scratch["flee_from"] = tuple(keeper.position)
                    nav.scratch["hold_frames"] = 0
        for nav in ground_navs:
            for keeper in keepers:
                if horizontal_dist2(nav.position, keeper.position) <= r2:
                    keeper.scratch["flee_from"] = tuple(nav.position)

    def check_done(self, world: World) -> bool:
        return bool(world.scenario_state.get("nav_won", False))

    # -- rewards -------------------------------------------------------------------

    def step_rewards(self, world: World, events) -> dict[int, float]:
        air_navs = [
            a for a in world.agents if a.alive and a.team_id == NAVIGATOR_TEAM and a.kind.is_air
        ]
        if air_navs:
            total = 0.0
            for nav in air_navs:
                d2, _, _ = min(
                    (horizontal_dist2(nav.position, e.position), e.entity_id, e.position)
                    for e in world.entities
                    if e.kind == "landmark"
                )
                total += math.sqrt(d2)
            nav_value = -(total / len(air_navs)) / DENSE_SCALE
        else:
            nav_value = 0.0
        return {NAVIGATOR_TEAM: nav_value, KEEPER_TEAM: -nav_value}

    def terminal_rewards(self, world: World) -> dict[int, float]:
        if world.scenario_state.get("nav_won", False):
            return {NAVIGATOR_TEAM: 1.0, KEEPER_TEAM: -1.0}
        return {NAVIGATOR_TEAM: -1.0, KEEPER_TEAM: 1.0}

    def win_teams(self, world: World) -> set[int]:
        return {NAVIGATOR_TEAM} if world.scenario_state.get("nav_won", False) else {KEEPER_TEAM}
