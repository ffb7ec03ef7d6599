"""Trace records wrapped in TraceChunk frames for streaming/storage.

A server-side trace file is a sequence of TraceChunk frames, each carrying
one raw trace record; replay tooling accepts either this framed form or the
bare record stream the in-process runner writes (sniffed by leading magic).
"""

from __future__ import annotations

import io

from .. import trace as tracefmt
from .frames import CODEC_RAW, MAGIC, MessageKind, encode_frame, read_frame


class FrameTraceWriter:
    def __init__(self, path: str):
        self._fh = open(path, "wb")
        self._sequence = 0

    def _emit(self, record: bytes) -> None:
        self._sequence += 1
        self._fh.write(encode_frame(MessageKind.TRACE_CHUNK, self._sequence, record, CODEC_RAW))

    def episode_header(self, world, task_name: str, seed: int) -> None:
        self._emit(
            tracefmt.encode_header(
                tracefmt.EpisodeHeader(
                    task=task_name,
                    seed=seed,
                    decision_interval=world.time_config.decision_interval,
                    frame_rate=world.time_config.baseline_frame_rate,
                    initial_digest=world.hexdigest,
                )
            )
        )

    def step(self, step: int, digest: int, actions: dict[int, int]) -> None:
        self._emit(tracefmt.encode_step(step, digest, actions))

    def episode_end(self, world) -> None:
        self._emit(
            tracefmt.encode_end(
                tracefmt.EpisodeEnd(
                    steps=world.episode_step,
                    final_digest=world.hexdigest,
                    winners=sorted(world.winner_teams),
                )
            )
        )

    def close(self) -> None:
        try:
            self._fh.close()
        except Exception:
            pass


def unwrap_framed_trace(path: str) -> io.BytesIO:
    """Flatten a TraceChunk frame stream back into raw trace records."""
    out = io.BytesIO()
    with open(path, "rb") as fh:
        def recv_exact(n: int):
            data = fh.read(n)
            if not data:
                return None
            return data

        while True:
            frame = read_frame(recv_exact)
            if frame is None:
                break
            if frame.kind is not MessageKind.TRACE_CHUNK:
                raise ValueError(f"unexpected frame kind {frame.kind.name} in trace stream")
            out.write(frame.payload)
    out.seek(0)
    return out


def is_framed_trace(path: str) -> bool:
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    return head == MAGIC
