"""Client session for a served world (also the worker pool's per-worker leg).

One request in flight at a time; reset-before-step is the server's contract
and errors come back as ServerError carrying the server's report text.
"""

from __future__ import annotations

from typing import Optional

from .frames import CODEC_LZ4, MessageKind, RESPONSE_KIND, encode_frame, read_frame
from .messages import actions_to_wire, canonical_json, parse_json
from .transport import tcp_connect


class ServerError(Exception):
    """The server answered with an ErrorReport."""


class ConnectionClosed(Exception):
    pass


class WorldClient:
    def __init__(self, conn, prefer_codec: int = CODEC_LZ4):
        self._conn = conn
        self._sequence = 0
        self._codec = prefer_codec

    @classmethod
    def connect_tcp(cls, host: str, port: int, timeout: float = 10.0) -> "WorldClient":
        return cls(tcp_connect(host, port, timeout))

    def send(self, kind: MessageKind, body: dict) -> int:
        """Fire a request without waiting (the pool scatters this way)."""
        self._sequence += 1
        self._conn.send_bytes(encode_frame(kind, self._sequence, canonical_json(body), self._codec))
        return self._sequence

    def recv(self, expected: MessageKind) -> dict:
        frame = read_frame(self._conn.recv_exact)
        if frame is None:
            raise ConnectionClosed("server closed the connection")
        if frame.kind is MessageKind.ERROR_REPORT:
            raise ServerError(parse_json(frame.payload)["error"])
        if frame.kind is not expected:
            raise ServerError(f"expected {expected.name}, got {frame.kind.name}")
        return parse_json(frame.payload)

    def request(self, kind: MessageKind, body: dict) -> dict:
        self.send(kind, body)
        return self.recv(RESPONSE_KIND[kind])

    # -- convenience wrappers ------------------------------------------------

    def hello(self) -> dict:
        return self.request(MessageKind.HELLO, {})

    def configure(
        self,
        task: str,
        seed: int = 0,
        time: Optional[dict] = None,
        options: Optional[dict] = None,
        map_id: Optional[str] = None,
    ) -> dict:
        body: dict = {"task": task, "seed": seed}
        if time:
            body["time"] = time
        if options:
            body["options"] = options
        if map_id:
            body["map"] = map_id
        return self.request(MessageKind.CONFIGURE, body)

    def reset(self, seed: Optional[int] = None) -> dict:
        return self.request(MessageKind.RESET, {} if seed is None else {"seed": seed})

    def step(self, actions: dict[int, int]) -> dict:
        return self.request(MessageKind.STEP_REQUEST, {"actions": actions_to_wire(actions)})

    def shutdown(self, stop_server: bool = False) -> None:
        try:
            self.request(MessageKind.SHUTDOWN, {"stop_server": stop_server})
        except (ConnectionClosed, OSError):
            pass

    def close(self) -> None:
        self._conn.close()
