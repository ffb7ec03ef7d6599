"""Wire frame layout and codecs.

Every message travels as one frame:

    offset size  field
    0      4     magic "UMAP"
    4      1     version (currently 1)
    5      1     codec: 0 raw, 1 LZ4 block (u32 LE decompressed size + block)
    6      2     message type, big-endian
    8      4     sequence number, big-endian
    12     4     payload length after compression, big-endian
    16     ...   payload

Compression is opportunistic: a frame encoded with codec 1 silently records
codec 0 when the payload is small (< 256 bytes) or incompressible, so the
decoded payload is always identical regardless of codec choice.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

from . import lz4block

MAGIC = b"UMAP"
VERSION = 1
HEADER_SIZE = 16
_HEADER_FMT = ">4sBBHII"

CODEC_RAW = 0
CODEC_LZ4 = 1

#: Payloads below this size are never worth compressing.
COMPRESS_THRESHOLD = 256

MAX_PAYLOAD = 2**31


class MessageKind(IntEnum):
    HELLO = 1
    CONFIGURE = 2
    RESET = 3
    STEP_REQUEST = 4
    STEP_RESPONSE = 5
    TRACE_CHUNK = 6
    SHUTDOWN = 7
    ERROR_REPORT = 8


#: Request -> response pairing (lockstep: exactly one response per request).
RESPONSE_KIND = {
    MessageKind.HELLO: MessageKind.HELLO,
    MessageKind.CONFIGURE: MessageKind.CONFIGURE,
    MessageKind.RESET: MessageKind.RESET,
    MessageKind.STEP_REQUEST: MessageKind.STEP_RESPONSE,
    MessageKind.SHUTDOWN: MessageKind.SHUTDOWN,
}


class FrameError(Exception):
    """Base for every frame decode failure."""


class BadMagicError(FrameError):
    pass


class UnknownVersionError(FrameError):
    pass


class UnknownCodecError(FrameError):
    pass


class UnknownKindError(FrameError):
    pass


class TruncatedError(FrameError):
    pass


class CorruptPayloadError(FrameError):
    pass


class PayloadTooLargeError(FrameError):
    pass


@dataclass(frozen=True)
class Frame:
    kind: MessageKind
    sequence: int
    payload: bytes
    codec: int = CODEC_RAW  # codec recorded on the wire


def encode_frame(kind: MessageKind, sequence: int, payload: bytes, codec: int = CODEC_RAW) -> bytes:
    """Serialize one frame. codec=CODEC_LZ4 requests compression; it is
    applied only when it actually shrinks the payload."""
    if len(payload) >= MAX_PAYLOAD:
        raise PayloadTooLargeError(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    if codec not in (CODEC_RAW, CODEC_LZ4):
        raise UnknownCodecError(f"codec {codec}")
    wire_codec = CODEC_RAW
    wire_payload = payload
    if codec == CODEC_LZ4 and len(payload) >= COMPRESS_THRESHOLD:
        packed = struct.pack("<I", len(payload)) + lz4block.compress(payload)
        if len(packed) < len(payload):
            wire_codec = CODEC_LZ4
            wire_payload = packed
    header = struct.pack(
        _HEADER_FMT, MAGIC, VERSION, wire_codec, int(kind), sequence, len(wire_payload)
    )
    return header + wire_payload


def decode_header(header: bytes) -> tuple[int, int, int, int]:
    """Validate a 16-byte header; returns (codec, msg_type, sequence, payload_len)."""
    if len(header) < HEADER_SIZE:
        raise TruncatedError(f"header is {len(header)} bytes, need {HEADER_SIZE}")
    magic, version, codec, msg_type, sequence, payload_len = struct.unpack(_HEADER_FMT, header)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise UnknownVersionError(f"version {version}")
    if codec not in (CODEC_RAW, CODEC_LZ4):
        raise UnknownCodecError(f"codec {codec}")
    try:
        MessageKind(msg_type)
    except ValueError:
        raise UnknownKindError(f"message type {msg_type}") from None
    return codec, msg_type, sequence, payload_len


def decode_frame(data: bytes) -> Frame:
    """Parse one complete frame from a byte string."""
    codec, msg_type, sequence, payload_len = decode_header(data[:HEADER_SIZE])
    body = data[HEADER_SIZE : HEADER_SIZE + payload_len]
    if len(body) < payload_len:
        raise TruncatedError(f"payload is {len(body)} bytes, header claims {payload_len}")
    payload = _decode_payload(codec, body)
    return Frame(MessageKind(msg_type), sequence, payload, codec)


def _decode_payload(codec: int, body: bytes) -> bytes:
    if codec == CODEC_RAW:
        return body
    if len(body) < 4:
        raise CorruptPayloadError("compressed payload shorter than its size prefix")
    (size,) = struct.unpack("<I", body[:4])
    try:
        return lz4block.decompress(body[4:], expected_size=size)
    except lz4block.CorruptBlockError as exc:
        raise CorruptPayloadError(str(exc)) from None


def read_frame(recv_exact) -> Frame | None:
    """Read one frame via a callable recv_exact(n) -> bytes|None (None = EOF
    at a frame boundary; mid-frame EOF raises TruncatedError)."""
    header = recv_exact(HEADER_SIZE)
    if header is None:
        return None
    codec, msg_type, sequence, payload_len = decode_header(header)
    if payload_len:
        body = recv_exact(payload_len)
        if body is None:
            raise TruncatedError("connection closed mid-payload")
    else:
        body = b""
    return Frame(MessageKind(msg_type), sequence, _decode_payload(codec, body), codec)
