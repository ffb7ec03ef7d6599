"""World-serving endpoint: one lockstep world per connection.

The served world never advances on its own: a StepRequest is the only thing
that moves simulation time, so between a StepResponse and the next request
the frame index is frozen (Hello doubles as a probe for exactly that).
Protocol violations are answered with an ErrorReport and the connection is
closed; sequence numbers must strictly increase per connection.
"""

from __future__ import annotations

import os
import time
from typing import Optional

from ..scenarios import make_world, registry_lookup
from ..timeflow import TimeConfig, parse_dilation
from ..world import MissingActionError, EpisodeOverError
from . import frames
from .frames import CODEC_LZ4, CODEC_RAW, Frame, MessageKind, encode_frame, read_frame
from .messages import actions_from_wire, canonical_json, parse_json, state_body
from .trace_stream import FrameTraceWriter


class ProtocolViolation(Exception):
    pass


class WorldService:
    """Message handler for one connection. Shares nothing across connections."""

    def __init__(self, prefer_codec: int = CODEC_LZ4, world_factory=None):
        self.world = None
        self.task = None
        self.seed = 0
        self.send_observations = True
        self.prefer_codec = prefer_codec
        self.world_factory = world_factory if world_factory is not None else make_world
        self.trace: Optional[FrameTraceWriter] = None
        self._last_sequence: Optional[int] = None

    # -- dispatch --------------------------------------------------------

    def handle(self, frame: Frame) -> tuple[MessageKind, dict, bool]:
        """Returns (response kind, response body, keep_going)."""
        if self._last_sequence is not None and frame.sequence <= self._last_sequence:
            raise ProtocolViolation(
                f"sequence {frame.sequence} not greater than {self._last_sequence}"
            )
        self._last_sequence = frame.sequence

        if frame.kind is MessageKind.HELLO:
            return MessageKind.HELLO, self._hello(), True
        if frame.kind is MessageKind.CONFIGURE:
            return MessageKind.CONFIGURE, self._configure(parse_json(frame.payload)), True
        if frame.kind is MessageKind.RESET:
            return MessageKind.RESET, self._reset(parse_json(frame.payload)), True
        if frame.kind is MessageKind.STEP_REQUEST:
            return MessageKind.STEP_RESPONSE, self._step(parse_json(frame.payload)), True
        if frame.kind is MessageKind.SHUTDOWN:
            return MessageKind.SHUTDOWN, {"ok": True}, False
        raise ProtocolViolation(f"unexpected message kind {frame.kind.name}")

    def _hello(self) -> dict:
        return {
            "proto": frames.VERSION,
            "server": "umap-sim",
            "frame_index": None if self.world is None else self.world.frame_index,
        }

    def _configure(self, body: dict) -> dict:
        task = registry_lookup(body["task"])
        time_doc = body.get("time", {})
        tc = TimeConfig(
            decision_interval=time_doc.get("decision_interval", task.decision_interval),
            baseline_frame_rate=time_doc.get("frame_rate", task.frame_rate),
            dilation_factor=parse_dilation(str(time_doc.get("dilation", "max"))),
        )
        options = body.get("options", {})
        self.send_observations = bool(options.get("send_observations", True))
        self.task = task
        self.seed = int(body.get("seed", 0))
        self.world = self.world_factory(task, time_config=tc, map_id=body.get("map"))
        self.world.reset(self.seed)

        trace_dir = options.get("trace_dir") or os.environ.get("UMAP_TRACE_DIR")
        if self.trace is not None:
            self.trace.close()
            self.trace = None
        if trace_dir:
            os.makedirs(trace_dir, exist_ok=True)
            path = os.path.join(trace_dir, f"{task.name}_{self.seed}_{int(time.time() * 1000)}.trace")
            self.trace = FrameTraceWriter(path)

        return {
            "ok": True,
            "task": task.to_json(),
            "n_agents": len(self.world.agents),
            "agents": [
                {"id": a.agent_id, "team": a.team_id, "kind": a.kind.name, "n_actions": a.kind.n_actions}
                for a in self.world.agents
            ],
            "map": self.world.map.summary(),
        }

    def _require_world(self):
        if self.world is None:
            raise ProtocolViolation("not configured: send Configure before Reset/Step")
        return self.world

    def _reset(self, body: dict) -> dict:
        world = self._require_world()
        if "seed" in body and body["seed"] is not None:
            self.seed = int(body["seed"])
        world.reset(self.seed)
        if self.trace is not None:
            self.trace.episode_header(world, getattr(world, "task_name", ""), self.seed)
        return self._state(rewards={}, events=(), done=False)

    def _step(self, body: dict) -> dict:
        world = self._require_world()
        if world.done:
            raise ProtocolViolation("episode is done; send Reset")
        try:
            actions = actions_from_wire(body["actions"])
            result = world.step(actions)
        except (MissingActionError, EpisodeOverError, KeyError, ValueError, TypeError) as exc:
            raise ProtocolViolation(str(exc)) from None
        if self.trace is not None:
            self.trace.step(world.episode_step - 1, world.digest, actions)
            if result.done:
                self.trace.episode_end(world)
        return self._state(rewards=result.rewards, events=result.events, done=result.done)

    def _state(self, rewards, events, done) -> dict:
        world = self.world
        observations = world.scenario.observe(world) if self.send_observations else None
        return state_body(world, observations, rewards, events, done)

    def close(self) -> None:
        if self.trace is not None:
            self.trace.close()
            self.trace = None


def serve_connection(conn, prefer_codec: int = CODEC_LZ4, world_factory=None) -> bool:
    """Drive one connection to completion. Returns True when the client asked
    the whole server (not just the connection) to stop."""
    service = WorldService(prefer_codec=prefer_codec, world_factory=world_factory)
    stop_server = False
    try:
        while True:
            try:
                frame = read_frame(conn.recv_exact)
            except frames.FrameError as exc:
                _send_error(conn, 0, f"frame error: {exc}")
                return False
            if frame is None:
                return False
            try:
                kind, body, keep_going = service.handle(frame)
            except ProtocolViolation as exc:
                _send_error(conn, frame.sequence, str(exc))
                return False
            except Exception as exc:  # internal failure: report, then drop
                _send_error(conn, frame.sequence, f"internal error: {exc}")
                return False
            conn.send_bytes(
                encode_frame(kind, frame.sequence, canonical_json(body), service.prefer_codec)
            )
            if not keep_going:
                stop_server = bool(parse_json(frame.payload).get("stop_server", False))
                return stop_server
    finally:
        service.close()
        conn.close()
    return stop_server


def _send_error(conn, sequence: int, text: str) -> None:
    try:
        conn.send_bytes(
            encode_frame(MessageKind.ERROR_REPORT, sequence, canonical_json({"error": text}), CODEC_RAW)
        )
    except Exception:
        pass


def serve_world(
    listener,
    world_factory=None,
    prefer_codec: int = CODEC_LZ4,
    accept_timeout: Optional[float] = None,
) -> None:
    """Accept loop: connections are handled one at a time, each with its own
    fresh WorldService, until a client sends Shutdown{stop_server: true}.
    `world_factory(task_spec, time_config=..., map_id=...)` builds the served
    worlds (defaults to the task registry factory)."""
    while True:
        try:
            conn = listener.accept(accept_timeout)
        except TimeoutError:
            return
        except OSError:
            return
        if serve_connection(conn, prefer_codec, world_factory):
            return
