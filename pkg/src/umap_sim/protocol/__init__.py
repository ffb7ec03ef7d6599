from .client import ConnectionClosed, ServerError, WorldClient
from .frames import (
    BadMagicError,
    CODEC_LZ4,
    CODEC_RAW,
    CorruptPayloadError,
    Frame,
    FrameError,
    HEADER_SIZE,
    MessageKind,
    PayloadTooLargeError,
    TruncatedError,
    UnknownCodecError,
    UnknownKindError,
    UnknownVersionError,
    decode_frame,
    encode_frame,
    read_frame,
)
from .pool import PoolError, WorkerFailed, WorkerPool
from .server import WorldService, serve_connection, serve_world
from .transport import (
    ShmemConnection,
    ShmemListener,
    TcpConnection,
    TcpListener,
    TransportError,
    shmem_client,
    shmem_create_pair,
    shmem_server,
    tcp_connect,
)

__all__ = [
    "WorldClient",
    "ServerError",
    "ConnectionClosed",
    "Frame",
    "MessageKind",
    "encode_frame",
    "decode_frame",
    "read_frame",
    "FrameError",
    "BadMagicError",
    "UnknownVersionError",
    "UnknownCodecError",
    "UnknownKindError",
    "TruncatedError",
    "CorruptPayloadError",
    "PayloadTooLargeError",
    "CODEC_RAW",
    "CODEC_LZ4",
    "HEADER_SIZE",
    "WorkerPool",
    "WorkerFailed",
    "PoolError",
    "WorldService",
    "serve_world",
    "serve_connection",
    "TcpListener",
    "TcpConnection",
    "tcp_connect",
    "ShmemListener",
    "ShmemConnection",
    "shmem_client",
    "shmem_server",
    "shmem_create_pair",
    "TransportError",
]
