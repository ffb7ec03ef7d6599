"""Minimal tabular learner: independent per-agent Q over a coarse state grid.

This exists to exercise the training loop end to end, not to compete with
deep methods (those attach through the wire protocol instead). States come
from a scenario-specific discretizer over the global snapshot.
"""

from __future__ import annotations

from typing import Optional

from ..rng import substream
from .policies import TeamPolicy


def _bucket(value: float, edges: tuple[float, ...]) -> int:
    for i, edge in enumerate(edges):
        if value < edge:
            return i
    return len(edges)


def discretize_monster_crisis(snapshot: dict, agent: dict) -> tuple:
    """Coarse egocentric grid: signed distance buckets to the monster plus a
    contact flag and the monster's remaining-health quarter."""
    monster = next(e for e in snapshot["entities"] if e["kind"] == "monster")
    dx = monster["pos"][0] - agent["pos"][0]
    dy = monster["pos"][1] - agent["pos"][1]
    d2 = dx * dx + dy * dy
    hp_units = monster["scalars"]["hp_units"]
    max_units = monster["scalars"]["max_hp_units"]
    hp_quarter = min(3, 4 * hp_units // max_units) if max_units else 0
    return (
        _bucket(dx, (-1000.0, -200.0, 200.0, 1000.0)),
        _bucket(dy, (-1000.0, -200.0, 200.0, 1000.0)),
        1 if d2 <= 400.0 * 400.0 else 0,
        hp_quarter,
    )


def discretize_metal_clash(snapshot: dict, agent: dict) -> tuple:
    foes = [a for a in snapshot["agents"] if a["alive"] and a["team"] != agent["team"]]
    if not foes:
        return (9, 9, 0)
    best = min(
        foes,
        key=lambda f: (
            (f["pos"][0] - agent["pos"][0]) ** 2 + (f["pos"][1] - agent["pos"][1]) ** 2,
            f["id"],
        ),
    )
    dx = best["pos"][0] - agent["pos"][0]
    dy = best["pos"][1] - agent["pos"][1]
    d2 = dx * dx + dy * dy
    in_range = 1 if d2 <= agent["attack_range"] ** 2 else 0
    return (
        _bucket(dx, (-2000.0, -500.0, 500.0, 2000.0)),
        _bucket(dy, (-2000.0, -500.0, 500.0, 2000.0)),
        in_range,
    )


DISCRETIZERS = {
    "monster_crisis": discretize_monster_crisis,
    "metal_clash": discretize_metal_clash,
}


class TabularQPolicy(TeamPolicy):
    """One-step TD / epsilon-greedy over the discretized snapshot."""

    needs_observations = False

    def __init__(self, team_id: int, params: Optional[dict] = None):
        super().__init__(team_id, params)
        self.learning_rate = float(self.params.get("learning_rate", 0.1))
        self.gamma = float(self.params.get("gamma", 0.99))
        # exploration anneals linearly from epsilon_start to epsilon over
        # decay_episodes training episodes (sparse rewards need the early
        # all-random phase to ever see a payoff)
        self.epsilon = float(self.params.get("epsilon", 0.05))
        self.epsilon_start = float(self.params.get("epsilon_start", 1.0))
        self.decay_episodes = int(self.params.get("decay_episodes", 1000))
        self.table: dict[tuple, float] = {}
        self.n_actions: int = int(self.params.get("n_actions", 0))
        self.greedy = False  # evaluation mode: no exploration, no updates
        self.train_episodes_seen = 0

    def begin_episode(self, episode_seed: int) -> None:
        self._rng = substream(episode_seed, f"tabular_q/team{self.team_id}")
        if not self.greedy:
            self.train_episodes_seen += 1

    def current_epsilon(self) -> float:
        if self.greedy:
            return 0.0
        if self.decay_episodes <= 0:
            return self.epsilon
        frac = min(1.0, self.train_episodes_seen / self.decay_episodes)
        return self.epsilon_start + (self.epsilon - self.epsilon_start) * frac

    def q(self, state: tuple, action: int) -> float:
        return self.table.get((state, action), 0.0)

    def best_action(self, state: tuple, n_actions: int) -> int:
        best_a, best_q = 0, self.q(state, 0)
        for a in range(1, n_actions):
            qa = self.q(state, a)
            if qa > best_q:
                best_a, best_q = a, qa
        return best_a

    def state_key(self, snapshot: dict, agent: dict) -> tuple:
        discretize = DISCRETIZERS.get(snapshot["scenario"])
        if discretize is None:
            raise KeyError(f"no state discretizer for scenario {snapshot['scenario']!r}")
        return discretize(snapshot, agent)

    def clone_for_collection(self) -> "TabularQPolicy":
        clone = TabularQPolicy(self.team_id, self.params)
        clone.table = self.table  # learned state shared; episode RNG is not
        clone.n_actions = self.n_actions
        clone.greedy = self.greedy
        clone.train_episodes_seen = self.train_episodes_seen
        return clone

    def act(self, snapshot: dict, observations=None) -> dict[int, int]:
        actions = {}
        epsilon = self.current_epsilon()
        for agent in snapshot["agents"]:
            if agent["team"] != self.team_id or not agent["alive"]:
                continue
            n = agent["n_actions"]
            if self.n_actions == 0:
                self.n_actions = n
            state = self.state_key(snapshot, agent)
            if not self.greedy and self._rng.uniform() < epsilon:
                actions[agent["id"]] = self._rng.randint(0, n - 1)
            else:
                actions[agent["id"]] = self.best_action(state, n)
        return actions

    def td_update(self, state: tuple, action: int, reward: float, next_state: Optional[tuple], done: bool) -> None:
        target = reward
        if not done and next_state is not None and self.n_actions > 0:
            target += self.gamma * max(self.q(next_state, a) for a in range(self.n_actions))
        old = self.q(state, action)
        self.table[(state, action)] = old + self.learning_rate * (target - old)

    def update(self, transitions) -> None:
        if self.greedy:
            return
        for t in transitions:
            if t.state_key is None:
                continue
            self.td_update(t.state_key, t.action, t.reward, t.next_state_key, t.done)

    def save_state(self) -> dict:
        return {
            "n_actions": self.n_actions,
            "train_episodes_seen": self.train_episodes_seen,
            "table": [[list(state), action, value] for (state, action), value in sorted(self.table.items())],
        }

    def load_state(self, state: dict) -> None:
        self.n_actions = state["n_actions"]
        self.train_episodes_seen = state.get("train_episodes_seen", 0)
        self.table = {(tuple(s), a): v for s, a, v in state["table"]}
