"""Typed, deterministically ordered simulation events.

Scenario reward functions consume these instead of re-deriving state changes:
an agent death, an episode end, a flag pickup and so on all leave one event
behind. Events carry the frame at which they fired and are kept in
(frame_index, emission order) order, with per-frame batches sorted by subject.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional


class EventKind(Enum):
    AGENT_DESTROYED = "AgentDestroyed"
    EPISODE_ENDED = "EpisodeEnded"
    FLAG_PICKED_UP = "FlagPickedUp"
    FLAG_DROPPED = "FlagDropped"
    LANDMARK_HOLD_COMPLETED = "LandmarkHoldCompleted"
    MONSTER_KILLED = "MonsterKilled"
    ATTACK_LANDED = "AttackLanded"
    HEAL_APPLIED = "HealApplied"


@dataclass(frozen=True)
class Event:
    kind: EventKind
    frame_index: int
    subject_id: int
    object_id: Optional[int] = None
    magnitude: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "frame": self.frame_index,
            "subject": self.subject_id,
            "object": self.object_id,
            "magnitude": self.magnitude,
        }

    @staticmethod
    def from_json(obj: dict) -> "Event":
        return Event(
            kind=EventKind(obj["kind"]),
            frame_index=obj["frame"],
            subject_id=obj["subject"],
            object_id=obj.get("object"),
            magnitude=obj.get("magnitude"),
        )
