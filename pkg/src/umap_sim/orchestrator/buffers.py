"""Per-team transition routing.

Each team's experience stays in its own buffer; the union of all buffers is
exactly the set of transitions produced by collection, and buffer contents
are a pure function of the trajectories (nothing about policy update
scheduling can leak in).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence


@dataclass(frozen=True)
class Transition:
    episode: int
    step: int
    agent_id: int
    action: int
    reward: float
    done: bool
    obs: Optional[tuple] = None
    state_key: Optional[tuple] = None
    next_state_key: Optional[tuple] = None


@dataclass
class TeamBuffer:
    team_id: int
    transitions: list[Transition] = field(default_factory=list)

    def append(self, t: Transition) -> None:
        self.transitions.append(t)

    def episode_slice(self, episode: int) -> list[Transition]:
        return [t for t in self.transitions if t.episode == episode]

    def __len__(self) -> int:
        return len(self.transitions)

    def signature(self) -> tuple:
        """Canonical value for byte-level buffer comparisons in tests."""
        return tuple(
            (t.episode, t.step, t.agent_id, t.action, t.reward, t.done, t.obs, t.state_key)
            for t in self.transitions
        )


class RoutingError(Exception):
    pass


def route_transitions(
    step_transitions: Sequence[Transition],
    team_map: Mapping[int, int],
    buffers: Mapping[int, TeamBuffer],
) -> None:
    """Land each agent's transition in exactly its team's buffer."""
    for t in step_transitions:
        team = team_map.get(t.agent_id)
        if team is None:
            raise RoutingError(f"agent {t.agent_id} has no team")
        buffers[team].append(t)
