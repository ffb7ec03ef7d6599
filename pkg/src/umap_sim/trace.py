"""Episode trace files: length-prefixed binary records for bit-exact replay.

Layout per record: u32 little-endian body length, u8 record type, body.
Episode header and end records carry JSON bodies (schema versioned through
`layout_version`, which also pins the observation feature layout); step
records are packed binary holding the joint action and the post-step digest.
A trace is sufficient to re-run an episode and verify every digest.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterator, Optional

LAYOUT_VERSION = 1

REC_EPISODE_HEADER = 1
REC_STEP = 2
REC_EPISODE_END = 3


class TraceError(Exception):
    pass


@dataclass
class EpisodeHeader:
    task: str
    seed: int
    decision_interval: float
    frame_rate: float
    initial_digest: str
    layout_version: int = LAYOUT_VERSION


@dataclass
class StepRecord:
    step: int
    digest: int
    actions: dict[int, int]


@dataclass
class EpisodeEnd:
    steps: int
    final_digest: str
    winners: list[int]


def pack_record(rec_type: int, body: bytes) -> bytes:
    return struct.pack("<IB", len(body), rec_type) + body


def encode_header(h: EpisodeHeader) -> bytes:
    body = json.dumps(
        {
            "task": h.task,
            "seed": h.seed,
            "decision_interval": h.decision_interval,
            "frame_rate": h.frame_rate,
            "initial_digest": h.initial_digest,
            "layout_version": h.layout_version,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    return pack_record(REC_EPISODE_HEADER, body)


def encode_step(step: int, digest: int, actions: dict[int, int]) -> bytes:
    parts = [struct.pack("<IQH", step, digest, len(actions))]
    for aid in sorted(actions):
        parts.append(struct.pack("<Ii", aid, actions[aid]))
    return pack_record(REC_STEP, b"".join(parts))


def encode_end(e: EpisodeEnd) -> bytes:
    body = json.dumps(
        {"steps": e.steps, "final_digest": e.final_digest, "winners": e.winners},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    return pack_record(REC_EPISODE_END, body)


class TraceWriter:
    def __init__(self, fh: BinaryIO):
        self._fh = fh

    def episode_header(self, header: EpisodeHeader) -> None:
        self._fh.write(encode_header(header))

    def step(self, step: int, digest: int, actions: dict[int, int]) -> None:
        self._fh.write(encode_step(step, digest, actions))

    def episode_end(self, end: EpisodeEnd) -> None:
        self._fh.write(encode_end(end))

    def flush(self) -> None:
        self._fh.flush()


def read_records(fh: BinaryIO) -> Iterator[tuple[int, bytes]]:
    while True:
        head = fh.read(5)
        if not head:
            return
        if len(head) < 5:
            raise TraceError("truncated record header")
        length, rec_type = struct.unpack("<IB", head)
        body = fh.read(length)
        if len(body) < length:
            raise TraceError("truncated record body")
        yield rec_type, body


def decode_record(rec_type: int, body: bytes):
    try:
        if rec_type == REC_EPISODE_HEADER:
            obj = json.loads(body.decode("utf-8"))
            return EpisodeHeader(
                task=obj["task"],
                seed=obj["seed"],
                decision_interval=obj["decision_interval"],
                frame_rate=obj["frame_rate"],
                initial_digest=obj["initial_digest"],
                layout_version=obj.get("layout_version", LAYOUT_VERSION),
            )
        if rec_type == REC_STEP:
            step, digest, count = struct.unpack_from("<IQH", body, 0)
            offset = struct.calcsize("<IQH")
            actions = {}
            for _ in range(count):
                aid, action = struct.unpack_from("<Ii", body, offset)
                offset += 8
                actions[aid] = action
            return StepRecord(step=step, digest=digest, actions=actions)
        if rec_type == REC_EPISODE_END:
            obj = json.loads(body.decode("utf-8"))
            return EpisodeEnd(
                steps=obj["steps"], final_digest=obj["final_digest"], winners=obj["winners"]
            )
    except (KeyError, ValueError, UnicodeDecodeError, struct.error) as exc:
        raise TraceError(f"malformed record of type {rec_type}: {exc}") from None
    raise TraceError(f"unknown record type {rec_type}")


@dataclass
class TracedEpisode:
    header: EpisodeHeader
    steps: list[StepRecord]
    end: Optional[EpisodeEnd]


def read_episodes(fh: BinaryIO) -> Iterator[TracedEpisode]:
    header: Optional[EpisodeHeader] = None
    steps: list[StepRecord] = []
    for rec_type, body in read_records(fh):
        record = decode_record(rec_type, body)
        if rec_type == REC_EPISODE_HEADER:
            if header is not None:
                yield TracedEpisode(header, steps, None)
            header, steps = record, []
        elif rec_type == REC_STEP:
            if header is None:
                raise TraceError("step record before episode header")
            steps.append(record)
        else:
            if header is None:
                raise TraceError("episode end before header")
            yield TracedEpisode(header, steps, record)
            header, steps = None, []
    if header is not None:
        yield TracedEpisode(header, steps, None)
