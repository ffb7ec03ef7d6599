"""Order-sensitive trajectory digests.

A digest summarizes one episode: after reset and after every decision step it
absorbs the frame index, each agent's pose and health quantized to 1e-6 world
units, and the step's event list. Two runs produce the same digest iff they
produced the same trajectory at that quantization, which is how dilation
neutrality and replay fidelity are asserted.

The hash is FNV-1a 64 over a canonical little-endian byte encoding. The digest
of an empty trajectory is the FNV-1a offset basis, 0xcbf29ce484222325.
"""

from __future__ import annotations

import struct

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF

QUANTUM = 1e-6


def fnv1a64(data: bytes, h: int = FNV_OFFSET) -> int:
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK
    return h


def _quantize(x: float) -> int:
    return round(x / QUANTUM)


class TrajectoryHasher:
    """Incremental digest over an episode's state/event sequence."""

    def __init__(self) -> None:
        self._h = FNV_OFFSET

    @property
    def digest(self) -> int:
        return self._h

    @property
    def hexdigest(self) -> str:
        return f"{self._h:016x}"

    def absorb_bytes(self, data: bytes) -> None:
        self._h = fnv1a64(data, self._h)

    def absorb_step(self, frame_index: int, agents, events) -> None:
        """Absorb one record: frame index, agent poses/health, step events.

        `agents` is an iterable of objects with agent_id, position (3-seq),
        hp and alive; `events` an iterable of Event values.
        """
        parts = [struct.pack("<q", frame_index)]
        for a in agents:
            parts.append(
                struct.pack(
                    "<qqqqqB",
                    a.agent_id,
                    _quantize(a.position[0]),
                    _quantize(a.position[1]),
                    _quantize(a.position[2]),
                    _quantize(a.hp),
                    1 if a.alive else 0,
                )
            )
        for e in events:
            parts.append(e.kind.value.encode("ascii"))
            parts.append(
                struct.pack(
                    "<qqqq",
                    e.frame_index,
                    e.subject_id,
                    -1 if e.object_id is None else e.object_id,
                    0 if e.magnitude is None else _quantize(e.magnitude),
                )
            )
        self.absorb_bytes(b"".join(parts))


def trajectory_hash(steps) -> int:
    """Digest of a whole trajectory given as (frame_index, agents, events) records."""
    hasher = TrajectoryHasher()
    for frame_index, agents, events in steps:
        hasher.absorb_step(frame_index, agents, events)
    return hasher.digest
