"""Team policies: built-in scripts, random, recorded-replay.

Every policy acts on the JSON-shaped global snapshot rather than on live
world objects. Snapshots roundtrip exactly through the wire protocol, and
the scripts below restrict themselves to plain double arithmetic (sums,
products, comparisons), so a remote client re-implementing them observes
identical action streams and therefore identical trajectories.
"""

from __future__ import annotations

from typing import Optional

from ..rng import substream

# Action ids shared with the scenario decoders.
MC_ATTACK_NEAREST, MC_HEAL = 5, 9
MOC_COLLIDE = 6
NAV_FLEE, NAV_APPROACH = 5, 6


class TeamPolicy:
    """Base: a policy controls all agents of one team."""

    needs_observations = False

    def __init__(self, team_id: int, params: Optional[dict] = None):
        self.team_id = team_id
        self.params = dict(params or {})

    def begin_episode(self, episode_seed: int) -> None:
        pass

    def act(self, snapshot: dict, observations: Optional[dict] = None) -> dict[int, int]:
        raise NotImplementedError

    def update(self, transitions) -> None:
        """Consume a slice of this team's buffer after collection."""

    def clone_for_collection(self) -> "TeamPolicy":
        """Fresh instance for one parallel episode; learned state may be
        shared by reference, per-episode state (RNG) must not be."""
        return type(self)(self.team_id, self.params)

    def save_state(self) -> dict:
        return {}

    def load_state(self, state: dict) -> None:
        pass


def _my_living(snapshot: dict, team_id: int) -> list[dict]:
    return [a for a in snapshot["agents"] if a["team"] == team_id and a["alive"]]


def _living(snapshot: dict) -> list[dict]:
    return [a for a in snapshot["agents"] if a["alive"]]


def _d2(p: list, q: list) -> float:
    dx = q[0] - p[0]
    dy = q[1] - p[1]
    dz = q[2] - p[2]
    return dx * dx + dy * dy + dz * dz


def _hd2(p: list, q: list) -> float:
    dx = q[0] - p[0]
    dy = q[1] - p[1]
    return dx * dx + dy * dy


def _quantize_4way(dx: float, dy: float) -> int:
    """Nearest of N/E/S/W (action ids 1..4) for a bearing; x wins ties."""
    if abs(dx) >= abs(dy):
        return 2 if dx > 0 else 4
    return 1 if dy > 0 else 3


class RandomPolicy(TeamPolicy):
    """Uniform random legal actions from a per-(episode, team) substream."""

    def begin_episode(self, episode_seed: int) -> None:
        self._rng = substream(episode_seed, f"random_policy/team{self.team_id}")

    def act(self, snapshot: dict, observations=None) -> dict[int, int]:
        return {
            a["id"]: self._rng.randint(0, a["n_actions"] - 1)
            for a in _my_living(snapshot, self.team_id)
        }


class RecordedPolicy(TeamPolicy):
    """Replays a recorded per-step action log (missing steps: repeat last)."""

    def __init__(self, team_id: int, action_log: list[dict[int, int]]):
        super().__init__(team_id)
        self.action_log = action_log

    def begin_episode(self, episode_seed: int) -> None:
        self._step = 0

    def act(self, snapshot: dict, observations=None) -> dict[int, int]:
        idx = min(self._step, len(self.action_log) - 1)
        self._step += 1
        recorded = self.action_log[idx]
        return {a["id"]: recorded[a["id"]] for a in _my_living(snapshot, self.team_id)}

    def clone_for_collection(self) -> "RecordedPolicy":
        return RecordedPolicy(self.team_id, self.action_log)


class ScriptedPolicy(TeamPolicy):
    """Built-in per-scenario behaviour. Dispatches on the snapshot's scenario."""

    def act(self, snapshot: dict, observations=None) -> dict[int, int]:
        scenario = snapshot["scenario"]
        if scenario == "metal_clash":
            return self._metal_clash(snapshot)
        if scenario == "monster_crisis":
            return self._monster_crisis(snapshot)
        if scenario == "flag_capture":
            return self._flag_capture(snapshot)
        if scenario == "navigation_game":
            return self._navigation_game(snapshot)
        raise KeyError(f"no built-in script for scenario {scenario!r}")

    # Advance toward the enemy until someone is in sensor range, then press
    # the attack; support drones patch up the most damaged ally in reach.
    def _metal_clash(self, snapshot: dict) -> dict[int, int]:
        actions: dict[int, int] = {}
        living = _living(snapshot)
        spawn_centers = snapshot["map"]["spawn_centers"]
        for me in _my_living(snapshot, self.team_id):
            if me["heal_rate"] > 0.0:
                sr2 = me["support_range"] * me["support_range"]
                hurt = [
                    a
                    for a in living
                    if a["team"] == self.team_id
                    and a["id"] != me["id"]
                    and a["hp"] < a["max_hp"]
                    and _d2(me["pos"], a["pos"]) <= sr2
                ]
                if hurt:
                    actions[me["id"]] = MC_HEAL
                    continue
            obs2 = me["obs_range"] * me["obs_range"]
            seen = [
                a
                for a in living
                if a["team"] != self.team_id
                and _d2(me["pos"], a["pos"]) <= obs2
                and (me["can_attack_air"] if a["is_air"] else me["can_attack_ground"])
            ]
            if seen:
                actions[me["id"]] = MC_ATTACK_NEAREST
                continue
            enemy_teams = sorted(
                t for t in spawn_centers if int(t) != self.team_id and int(t) in _teams(snapshot)
            )
            target = spawn_centers[enemy_teams[0]]
            actions[me["id"]] = _quantize_4way(target[0] - me["pos"][0], target[1] - me["pos"][1])
        return actions

    def _monster_crisis(self, snapshot: dict) -> dict[int, int]:
        return {a["id"]: MOC_COLLIDE for a in _my_living(snapshot, self.team_id)}

    # Head for the flag; once a teammate holds it, shadow the carrier.
    def _flag_capture(self, snapshot: dict) -> dict[int, int]:
        flag = next(e for e in snapshot["entities"] if e["kind"] == "flag")
        holder_id = snapshot["state"]["holder_id"]
        holder_team = snapshot["state"]["holder_team"]
        holder_pos = None
        if holder_id >= 0 and holder_team == self.team_id:
            holder_pos = next(a["pos"] for a in snapshot["agents"] if a["id"] == holder_id)
        actions = {}
        for me in _my_living(snapshot, self.team_id):
            target = flag["pos"]
            if holder_pos is not None and holder_id != me["id"]:
                target = holder_pos
            actions[me["id"]] = _heading_action(
                target[0] - me["pos"][0], target[1] - me["pos"][1]
            )
        return actions

    # Navigators run for the nearest landmark, breaking off when a keeper
    # closes in; keepers intercept whatever air navigator they can see.
    def _navigation_game(self, snapshot: dict) -> dict[int, int]:
        actions = {}
        living = _living(snapshot)
        for me in _my_living(snapshot, self.team_id):
            if me["kind"] == "ground_keeper":
                actions[me["id"]] = NAV_APPROACH
                continue
            if me["is_air"]:
                evade2 = 600.0 * 600.0
                obs2 = me["obs_range"] * me["obs_range"]
                threatened = any(
                    a["team"] != self.team_id
                    and not a["is_air"]
                    and _hd2(me["pos"], a["pos"]) <= evade2
                    and _d2(me["pos"], a["pos"]) <= obs2
                    for a in living
                )
                actions[me["id"]] = NAV_FLEE if threatened else NAV_APPROACH
            else:
                actions[me["id"]] = NAV_APPROACH
        return actions


def _teams(snapshot: dict) -> set[int]:
    return {int(t) for t in snapshot["teams"]}


def _heading_action(dx: float, dy: float) -> int:
    """Index of the 45-degree heading nearest the bearing (max dot product,
    lowest index on ties). Mirrors the flag-capture action set exactly."""
    s = 0.7071067811865476
    headings = ((1.0, 0.0), (s, s), (0.0, 1.0), (-s, s), (-1.0, 0.0), (-s, -s), (0.0, -1.0), (s, -s))
    best_k = 0
    best_dot = headings[0][0] * dx + headings[0][1] * dy
    for k in range(1, 8):
        dot = headings[k][0] * dx + headings[k][1] * dy
        if dot > best_dot:
            best_dot = dot
            best_k = k
    return best_k


def make_policy(name: str, team_id: int, params: Optional[dict] = None) -> TeamPolicy:
    from .tabular_q import TabularQPolicy

    registry = {
        "scripted": ScriptedPolicy,
        "random": RandomPolicy,
        "tabular_q": TabularQPolicy,
    }
    try:
        cls = registry[name]
    except KeyError:
        raise KeyError(f"unknown policy {name!r}; known: {sorted(registry)}") from None
    return cls(team_id, params)
