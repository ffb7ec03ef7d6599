"""Byte transports: TCP sockets and a local shared-memory channel.

Both expose the same tiny surface (send_bytes / recv_exact / close) so the
frame layer does not care which pipe it runs over. The shared-memory channel
is a pair of single-writer single-reader mailboxes, one per direction, sized
for one in-flight frame - exactly what the lockstep protocol needs.
"""

from __future__ import annotations

import socket
import struct
import time
from multiprocessing import shared_memory
from typing import Optional

SHMEM_CAPACITY = 8 * 1024 * 1024
_HDR = struct.Struct("<QQI")  # write counter, read counter, payload length


class TransportError(Exception):
    pass


class TcpConnection:
    def __init__(self, sock: socket.socket):
        self._sock = sock
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def send_bytes(self, data: bytes) -> None:
        self._sock.sendall(data)

    def recv_exact(self, n: int) -> Optional[bytes]:
        chunks = []
        remaining = n
        while remaining:
            chunk = self._sock.recv(remaining)
            if not chunk:
                return None if remaining == n and not chunks else _raise_truncated()
            chunks.append(chunk)
            remaining -= len(chunk)
        return b"".join(chunks)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


def _raise_truncated():
    raise TransportError("connection closed mid-message")


class TcpListener:
    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen(8)

    @property
    def port(self) -> int:
        return self._sock.getsockname()[1]

    def accept(self, timeout: Optional[float] = None) -> TcpConnection:
        self._sock.settimeout(timeout)
        conn, _ = self._sock.accept()
        conn.settimeout(None)
        return TcpConnection(conn)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


def tcp_connect(host: str, port: int, timeout: float = 10.0) -> TcpConnection:
    return TcpConnection(socket.create_connection((host, port), timeout=timeout))


class _Mailbox:
    """One direction of the shared-memory channel: a single-slot mailbox
    guarded by monotonically increasing write/read counters."""

    def __init__(self, shm: shared_memory.SharedMemory):
        self._shm = shm

    def _counters(self) -> tuple[int, int, int]:
        return _HDR.unpack_from(self._shm.buf, 0)

    def put(self, data: bytes, poll: float = 0.0001) -> None:
        if len(data) > SHMEM_CAPACITY:
            raise TransportError(f"frame of {len(data)} bytes exceeds channel capacity")
        while True:
            write, read, _ = self._counters()
            if write == read:
                break
            time.sleep(poll)
        self._shm.buf[_HDR.size : _HDR.size + len(data)] = data
        _HDR.pack_into(self._shm.buf, 0, write + 1, read, len(data))

    def get(self, poll: float = 0.0001, timeout: Optional[float] = None) -> bytes:
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            write, read, length = self._counters()
            if write > read:
                break
            if deadline is not None and time.monotonic() > deadline:
                raise TransportError("shmem recv timeout")
            time.sleep(poll)
        data = bytes(self._shm.buf[_HDR.size : _HDR.size + length])
        _HDR.pack_into(self._shm.buf, 0, write, read + 1, 0)
        return data


class ShmemConnection:
    """Framed connection over two mailboxes. Buffers the incoming frame so
    recv_exact can serve it in header/payload pieces."""

    def __init__(self, outbox: _Mailbox, inbox: _Mailbox, owned=()):
        self._outbox = outbox
        self._inbox = inbox
        self._owned = list(owned)
        self._pending = b""
        self._closed = False

    def send_bytes(self, data: bytes) -> None:
        self._outbox.put(data)

    def recv_exact(self, n: int) -> Optional[bytes]:
        while len(self._pending) < n:
            try:
                self._pending += self._inbox.get()
            except TransportError:
                return None
        out, self._pending = self._pending[:n], self._pending[n:]
        return out

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        for shm in self._owned:
            try:
                shm.close()
            except Exception:
                pass

    def unlink(self) -> None:
        for shm in self._owned:
            try:
                shm.unlink()
            except Exception:
                pass


def shmem_create_pair(channel: str) -> tuple[shared_memory.SharedMemory, shared_memory.SharedMemory]:
    """Allocate both direction mailboxes; whoever creates them unlinks them."""
    size = _HDR.size + SHMEM_CAPACITY
    c2s = shared_memory.SharedMemory(create=True, size=size, name=f"{channel}_c2s")
    s2c = shared_memory.SharedMemory(create=True, size=size, name=f"{channel}_s2c")
    _HDR.pack_into(c2s.buf, 0, 0, 0, 0)
    _HDR.pack_into(s2c.buf, 0, 0, 0, 0)
    return c2s, s2c


def shmem_client(channel: str, create: bool = False) -> ShmemConnection:
    if create:
        c2s, s2c = shmem_create_pair(channel)
    else:
        c2s = shared_memory.SharedMemory(name=f"{channel}_c2s")
        s2c = shared_memory.SharedMemory(name=f"{channel}_s2c")
    return ShmemConnection(outbox=_Mailbox(c2s), inbox=_Mailbox(s2c), owned=(c2s, s2c))


def shmem_server(channel: str, create: bool = False) -> ShmemConnection:
    if create:
        c2s, s2c = shmem_create_pair(channel)
    else:
        c2s = shared_memory.SharedMemory(name=f"{channel}_c2s")
        s2c = shared_memory.SharedMemory(name=f"{channel}_s2c")
    return ShmemConnection(outbox=_Mailbox(s2c), inbox=_Mailbox(c2s), owned=(c2s, s2c))


class ShmemListener:
    """Single-connection 'listener' over a named channel: accept() hands out
    the server endpoint once, then reports end-of-service."""

    def __init__(self, channel: str, create: bool = False):
        self.channel = channel
        self._conn: Optional[ShmemConnection] = shmem_server(channel, create=create)

    def accept(self, timeout: Optional[float] = None) -> ShmemConnection:
        if self._conn is None:
            raise OSError("shmem channel already served")
        conn, self._conn = self._conn, None
        return conn

    def close(self) -> None:
        if self._conn is not None:
            self._conn.close()
            self._conn = None
