"""World core: agents, entities, the decision-step state machine.

A world advances only when a full joint action is committed; each decision
step then simulates a fixed number of frames (decode/latch -> kinematics ->
interaction rules -> events). All randomness flows from one seeded generator,
health is tracked in integer sixths of a hit point so damage arithmetic is
exact, and every episode produces an order-sensitive trajectory digest.

Objects are recycled through a pool across episodes so long experiment runs
keep a flat memory profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .events import Event, EventKind
from .hashing import TrajectoryHasher
from .perception import Box, ObservationSpec, PerceptionShape
from .rng import SplitMix64, substream
from .timeflow import Pacer, SimClock, TimeConfig, WallClock, frames_per_decision

#: Health bookkeeping scale: integer sixths of a hit point, so that attack
#: strengths of 1 and 1/6 are both exact and damage totals balance exactly.
HP_SCALE = 6

#: Entity ids start here so agent and entity ids never collide.
ENTITY_ID_BASE = 10000


class WorldError(Exception):
    pass


class MissingActionError(WorldError):
    """A living agent was given no action (or an out-of-range one)."""


class EpisodeOverError(WorldError):
    """step() was called on a finished episode."""


class RosterError(WorldError):
    """The task roster is structurally invalid."""


@dataclass(frozen=True)
class AgentKind:
    """Immutable parameter bundle shared by every agent of one kind."""

    name: str
    kind_index: int
    max_speed: float
    max_hp_units: int
    n_actions: int
    obs_spec: ObservationSpec
    shape: PerceptionShape
    attack_power_units: int = 0
    attack_range: float = 0.0
    can_attack_ground: bool = False
    can_attack_air: bool = False
    heal_units: int = 0
    support_range: float = 0.0
    is_air: bool = False
    altitude: float = 0.0

    @property
    def max_hp(self) -> float:
        return self.max_hp_units / HP_SCALE

    @property
    def attack_power(self) -> float:
        return self.attack_power_units / HP_SCALE


class AgentState:
    """Mutable per-agent state. Instances are pooled and fully reinitialized
    on acquire, so no field may survive an episode boundary."""

    __slots__ = (
        "agent_id",
        "team_id",
        "kind",
        "position",
        "velocity",
        "heading",
        "hp_units",
        "alive",
        "scratch",
    )

    def __init__(self) -> None:
        self.agent_id = -1
        self.team_id = -1
        self.kind: AgentKind | None = None
        self.position = [0.0, 0.0, 0.0]
        self.velocity = [0.0, 0.0, 0.0]
        self.heading = [1.0, 0.0, 0.0]
        self.hp_units = 0
        self.alive = False
        self.scratch: dict = {}

    def init(self, agent_id: int, team_id: int, kind: AgentKind, position: Sequence[float]) -> None:
        self.agent_id = agent_id
        self.team_id = team_id
        self.kind = kind
        self.position = [position[0], position[1], position[2]]
        self.velocity = [0.0, 0.0, 0.0]
        self.heading = [1.0, 0.0, 0.0]
        self.hp_units = kind.max_hp_units
        self.alive = True
        self.scratch = {}

    @property
    def hp(self) -> float:
        return self.hp_units / HP_SCALE

    @property
    def max_hp(self) -> float:
        return self.kind.max_hp_units / HP_SCALE

    @property
    def max_speed(self) -> float:
        return self.kind.max_speed


class EntityState:
    """Mutable non-deciding object (flag, monster, landmark...). Pooled."""

    __slots__ = ("entity_id", "kind", "position", "extent", "scalars")

    def __init__(self) -> None:
        self.entity_id = -1
        self.kind = ""
        self.position = [0.0, 0.0, 0.0]
        self.extent = (0.0, 0.0, 0.0)
        self.scalars: dict = {}

    def init(self, entity_id: int, kind: str, position: Sequence[float], extent=(0.0, 0.0, 0.0)) -> None:
        self.entity_id = entity_id
        self.kind = kind
        self.position = [position[0], position[1], position[2]]
        self.extent = (extent[0], extent[1], extent[2])
        self.scalars = {}


class ObjectPool:
    """Free-list recycler for agent and entity objects.

    live/high-water counters exist so tests can assert that a long sequence
    of episodes neither leaks nor grows the working set.
    """

    def __init__(self) -> None:
        self._free: dict[str, list] = {}
        self.live_count: dict[str, int] = {}
        self.high_water_mark: dict[str, int] = {}

    def acquire(self, key: str, factory: Callable[[], object]):
        free = self._free.setdefault(key, [])
        obj = free.pop() if free else factory()
        live = self.live_count.get(key, 0) + 1
        self.live_count[key] = live
        if live > self.high_water_mark.get(key, 0):
            self.high_water_mark[key] = live
        return obj

    def release(self, key: str, obj) -> None:
        self._free.setdefault(key, []).append(obj)
        self.live_count[key] = self.live_count.get(key, 0) - 1

    @property
    def total_live(self) -> int:
        return sum(self.live_count.values())


@dataclass
class Command:
    """Latched result of decoding one agent's action for one decision step."""

    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    attack_target: Optional[int] = None
    damage_units: int = 0
    heal_target: Optional[int] = None
    heal_units: int = 0


@dataclass
class StepResult:
    events: list[Event]
    rewards: dict[int, float]
    done: bool


def integrate_kinematics(agent: AgentState, commanded_velocity: Sequence[float], dt: float) -> None:
    """First-order motion: clamp the commanded velocity to the agent's top
    speed, move for dt, and pin altitude (ground z=0, air z=flight altitude)."""
    vx, vy, vz = commanded_velocity[0], commanded_velocity[1], commanded_velocity[2]
    speed2 = vx * vx + vy * vy + vz * vz
    limit = agent.kind.max_speed
    if speed2 > limit * limit:
        scale = limit / math.sqrt(speed2)
        vx, vy, vz = vx * scale, vy * scale, vz * scale
    agent.velocity[0] = vx
    agent.velocity[1] = vy
    agent.velocity[2] = vz
    agent.position[0] += vx * dt
    agent.position[1] += vy * dt
    agent.position[2] = agent.kind.altitude if agent.kind.is_air else 0.0
    if vx != 0.0 or vy != 0.0:
        norm = math.sqrt(vx * vx + vy * vy)
        agent.heading[0] = vx / norm
        agent.heading[1] = vy / norm
        agent.heading[2] = 0.0


def discounted_team_return(
    reward_trace: Sequence[Mapping[int, float]], team: Iterable[int], gamma: float
) -> float:
    """Sum over steps k of gamma^k times the team's summed agent rewards."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must be in [0, 1), got {gamma}")
    members = set(team)
    total = 0.0
    weight = 1.0
    for step_rewards in reward_trace:
        total += weight * sum(r for aid, r in step_rewards.items() if aid in members)
        weight *= gamma
    return total


class World:
    """One episodic simulation confined to a single execution context."""

    def __init__(
        self,
        scenario,
        map_spec,
        teams: Sequence,
        max_episode_steps: int,
        time_config: TimeConfig | None = None,
        pool: ObjectPool | None = None,
        wall_clock: WallClock | None = None,
    ):
        if max_episode_steps <= 0:
            raise RosterError(f"max_episode_steps must be positive, got {max_episode_steps}")
        self.scenario = scenario
        self.map = map_spec
        self.team_specs = list(teams)
        self.max_episode_steps = max_episode_steps
        self.time_config = time_config if time_config is not None else TimeConfig()
        self.frames_per_decision = frames_per_decision(self.time_config)
        self.pool = pool if pool is not None else ObjectPool()
        self.pacer = Pacer(self.time_config, wall_clock)

        self.frame_index = 0
        self.episode_step = 0
        self.done = False
        self.agents: list[AgentState] = []
        self.entities: list[EntityState] = []
        self.teams: dict[int, list[int]] = {}
        self.rng = SplitMix64(0)
        self.scenario_state: dict = {}
        self.pending_events: list[Event] = []
        self.winner_teams: set[int] = set()
        self.hasher = TrajectoryHasher()
        self._frame_events: list[Event] = []
        self._seed = 0

    # -- lifecycle -----------------------------------------------------

    @property
    def clock(self) -> SimClock:
        return SimClock(self.frame_index, self.frame_index // self.frames_per_decision)

    @property
    def frame_dt(self) -> float:
        return self.time_config.frame_dt

    def reset(self, seed: int) -> None:
        """Start a fresh episode; identical (task, seed) pairs produce
        identical worlds. Previous episode objects return to the pool."""
        self._release_all()
        self._seed = seed
        self.rng = SplitMix64(seed)
        self.frame_index = 0
        self.episode_step = 0
        self.done = False
        self.scenario_state = {}
        self.pending_events = []
        self.winner_teams = set()
        self.hasher = TrajectoryHasher()
        self.teams = {}

        spawn_rng = substream(seed, "spawn")
        self.scenario.build(self, spawn_rng)
        if not self.agents:
            raise RosterError("scenario produced no agents")
        self.hasher.absorb_step(0, self.agents, [])
        self.pacer.start()

    def _release_all(self) -> None:
        for agent in self.agents:
            self.pool.release(f"agent:{agent.kind.name}", agent)
        for entity in self.entities:
            self.pool.release(f"entity:{entity.kind}", entity)
        self.agents = []
        self.entities = []

    def spawn_agent(self, team_id: int, kind: AgentKind, position: Sequence[float]) -> AgentState:
        agent: AgentState = self.pool.acquire(f"agent:{kind.name}", AgentState)
        agent.init(len(self.agents), team_id, kind, position)
        self.agents.append(agent)
        self.teams.setdefault(team_id, []).append(agent.agent_id)
        return agent

    def spawn_entity(self, kind: str, position: Sequence[float], extent=(0.0, 0.0, 0.0)) -> EntityState:
        entity: EntityState = self.pool.acquire(f"entity:{kind}", EntityState)
        entity.init(ENTITY_ID_BASE + len(self.entities), kind, position, extent)
        self.entities.append(entity)
        return entity

    # -- event emission ------------------------------------------------

    def emit(
        self,
        kind: EventKind,
        subject_id: int,
        object_id: Optional[int] = None,
        magnitude: Optional[float] = None,
    ) -> None:
        self._frame_events.append(Event(kind, self.frame_index, subject_id, object_id, magnitude))

    # -- stepping ------------------------------------------------------

    def step(self, joint_actions: Mapping[int, int]) -> StepResult:
        """Advance exactly one decision step (frames_per_decision frames).

        Every living agent must be given exactly one in-range action; dead
        agents' entries are ignored. On a validation error the world is left
        untouched.
        """
        if self.done:
            raise EpisodeOverError("episode is done; reset before stepping")
        self._validate_actions(joint_actions)

        commands = self.scenario.decode(self, joint_actions)
        step_events: list[Event] = []
        dt = self.frame_dt
        final = self.frames_per_decision - 1
        for f in range(self.frames_per_decision):
            self.frame_index += 1
            self._frame_events = []
            for agent in self.agents:
                if not agent.alive:
                    continue
                cmd = commands.get(agent.agent_id)
                integrate_kinematics(agent, cmd.velocity if cmd else (0.0, 0.0, 0.0), dt)
                self._clamp_to_bounds(agent)
            self.scenario.on_frame(self)
            if f == final:
                self.scenario.on_step_end(self, commands)
            self._frame_events.sort(key=lambda e: e.subject_id)
            step_events.extend(self._frame_events)
            self._frame_events = []
            self.pacer.frame_completed(self.clock)

        self.episode_step += 1
        outcome_done = self.scenario.check_done(self)
        done = outcome_done or self.episode_step >= self.max_episode_steps

        team_values = self.scenario.step_rewards(self, step_events)
        if done:
            self.done = True
            self.winner_teams = set(self.scenario.win_teams(self))
            terminal = self.scenario.terminal_rewards(self)
            for team_id, value in terminal.items():
                team_values[team_id] = team_values.get(team_id, 0.0) + value
            winner = min(self.winner_teams) if self.winner_teams else None
            step_events.append(Event(EventKind.EPISODE_ENDED, self.frame_index, -1, winner))

        rewards = {
            agent.agent_id: team_values.get(agent.team_id, 0.0) for agent in self.agents
        }
        self.pending_events = step_events
        self.hasher.absorb_step(self.frame_index, self.agents, step_events)
        return StepResult(step_events, rewards, done)

    def _validate_actions(self, joint_actions: Mapping[int, int]) -> None:
        missing = []
        invalid = []
        for agent in self.agents:
            if not agent.alive:
                continue
            action = joint_actions.get(agent.agent_id)
            if action is None:
                missing.append(agent.agent_id)
            elif not 0 <= action < agent.kind.n_actions:
                invalid.append((agent.agent_id, action))
        if missing:
            raise MissingActionError(f"no action for living agents {missing}")
        if invalid:
            raise MissingActionError(f"out-of-range actions {invalid}")

    def _clamp_to_bounds(self, agent: AgentState) -> None:
        bounds: Box = self.map.bounds
        for ax in range(2):
            lo = bounds.center[ax] - bounds.half[ax]
            hi = bounds.center[ax] + bounds.half[ax]
            if agent.position[ax] < lo:
                agent.position[ax] = lo
            elif agent.position[ax] > hi:
                agent.position[ax] = hi

    # -- lookups ---------------------------------------------------------

    def agent(self, agent_id: int) -> AgentState:
        return self.agents[agent_id]

    def living_agents(self) -> list[AgentState]:
        return [a for a in self.agents if a.alive]

    def team_of(self, agent_id: int) -> int:
        return self.agents[agent_id].team_id

    def entity_by_kind(self, kind: str) -> Optional[EntityState]:
        for entity in self.entities:
            if entity.kind == kind:
                return entity
        return None

    @property
    def digest(self) -> int:
        return self.hasher.digest

    @property
    def hexdigest(self) -> str:
        return self.hasher.hexdigest

    # -- snapshot ---------------------------------------------------------

    def snapshot(self) -> dict:
        """JSON-ready global state: the complete factored state of the world."""
        return {
            "scenario": self.scenario.name,
            "episode_step": self.episode_step,
            "frame_index": self.frame_index,
            "decision_index": self.frame_index // self.frames_per_decision,
            "done": self.done,
            "seed": self._seed,
            "rng_state": str(self.rng.state),
            "digest": self.hexdigest,
            "winners": sorted(self.winner_teams),
            "teams": {str(t): ids for t, ids in sorted(self.teams.items())},
            "agents": [
                {
                    "id": a.agent_id,
                    "team": a.team_id,
                    "kind": a.kind.name,
                    "kind_index": a.kind.kind_index,
                    "pos": list(a.position),
                    "vel": list(a.velocity),
                    "heading": list(a.heading),
                    "hp": a.hp,
                    "max_hp": a.max_hp,
                    "max_speed": a.kind.max_speed,
                    "attack_range": a.kind.attack_range,
                    "obs_range": a.kind.shape.radius,
                    "is_air": a.kind.is_air,
                    "can_attack_air": a.kind.can_attack_air,
                    "can_attack_ground": a.kind.can_attack_ground,
                    "heal_rate": a.kind.heal_units / HP_SCALE,
                    "support_range": a.kind.support_range,
                    "n_actions": a.kind.n_actions,
                    "alive": a.alive,
                }
                for a in self.agents
            ],
            "entities": [
                {
                    "id": e.entity_id,
                    "kind": e.kind,
                    "pos": list(e.position),
                    "extent": list(e.extent),
                    "scalars": dict(e.scalars),
                }
                for e in self.entities
            ],
            "state": self.scenario.public_state(self),
            "map": self.map.summary(),
        }
