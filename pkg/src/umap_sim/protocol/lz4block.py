"""LZ4 block-format codec (pure Python, no frame/container layer).

Implements the standard LZ4 block layout: a stream of sequences, each a
token byte (high nibble literal length, low nibble match length - 4, value
15 meaning "extended by following 255-bytes"), literals, then a 2-byte
little-endian match offset. The last sequence is literals-only, matches may
not start within the final 12 bytes and must end 5 bytes before the block
end. Output interoperates with any conforming LZ4 block decoder; keeping the
encoder in-tree pins wire bytes across platforms and library versions.
"""

from __future__ import annotations

MIN_MATCH = 4
MAX_OFFSET = 65535
_LAST_LITERALS = 5
_MF_LIMIT = 12
_HASH_MULT = 2654435761
_HASH_LOG = 16


class CorruptBlockError(ValueError):
    """The byte stream is not a valid LZ4 block (or disagrees with its framing)."""


def _hash4(data: bytes, pos: int) -> int:
    word = data[pos] | (data[pos + 1] << 8) | (data[pos + 2] << 16) | (data[pos + 3] << 24)
    return ((word * _HASH_MULT) & 0xFFFFFFFF) >> (32 - _HASH_LOG)


def _write_length(out: bytearray, length: int) -> None:
    while length >= 255:
        out.append(255)
        length -= 255
    out.append(length)


def compress(data: bytes) -> bytes:
    """Greedy hash-table matcher producing a valid LZ4 block."""
    n = len(data)
    out = bytearray()
    if n == 0:
        out.append(0)  # single empty-literal token
        return bytes(out)

    table: dict[int, int] = {}
    anchor = 0
    pos = 0
    match_limit = n - _MF_LIMIT  # matches may not start past here
    while pos < match_limit:
        h = _hash4(data, pos)
        candidate = table.get(h, -1)
        table[h] = pos
        if (
            candidate >= 0
            and pos - candidate <= MAX_OFFSET
            and data[candidate : candidate + MIN_MATCH] == data[pos : pos + MIN_MATCH]
        ):
            length = MIN_MATCH
            end = n - _LAST_LITERALS
            while pos + length < end and data[candidate + length] == data[pos + length]:
                length += 1
            literal_len = pos - anchor
            token_lit = min(literal_len, 15)
            token_match = min(length - MIN_MATCH, 15)
            out.append((token_lit << 4) | token_match)
            if token_lit == 15:
                _write_length(out, literal_len - 15)
            out.extend(data[anchor:pos])
            offset = pos - candidate
            out.append(offset & 0xFF)
            out.append(offset >> 8)
            if token_match == 15:
                _write_length(out, length - MIN_MATCH - 15)
            pos += length
            anchor = pos
        else:
            pos += 1

    literal_len = n - anchor
    token_lit = min(literal_len, 15)
    out.append(token_lit << 4)
    if token_lit == 15:
        _write_length(out, literal_len - 15)
    out.extend(data[anchor:])
    return bytes(out)


def decompress(data: bytes, expected_size: int | None = None) -> bytes:
    """Decode one LZ4 block. Raises CorruptBlockError on any malformation."""
    out = bytearray()
    n = len(data)
    if n == 0:
        raise CorruptBlockError("empty block")
    pos = 0
    while True:
        if pos >= n:
            raise CorruptBlockError("truncated block: missing token")
        token = data[pos]
        pos += 1
        literal_len = token >> 4
        if literal_len == 15:
            while True:
                if pos >= n:
                    raise CorruptBlockError("truncated literal length")
                extra = data[pos]
                pos += 1
                literal_len += extra
                if extra != 255:
                    break
        if pos + literal_len > n:
            raise CorruptBlockError("literals run past end of block")
        out.extend(data[pos : pos + literal_len])
        pos += literal_len
        if pos == n:
            break  # final literals-only sequence
        if pos + 2 > n:
            raise CorruptBlockError("truncated match offset")
        offset = data[pos] | (data[pos + 1] << 8)
        pos += 2
        if offset == 0 or offset > len(out):
            raise CorruptBlockError(f"invalid match offset {offset} at output size {len(out)}")
        match_len = (token & 0x0F) + MIN_MATCH
        if (token & 0x0F) == 15:
            while True:
                if pos >= n:
                    raise CorruptBlockError("truncated match length")
                extra = data[pos]
                pos += 1
                match_len += extra
                if extra != 255:
                    break
        start = len(out) - offset
        for i in range(match_len):  # byte-wise: overlapping matches replicate
            out.append(out[start + i])
    if expected_size is not None and len(out) != expected_size:
        raise CorruptBlockError(f"decoded {len(out)} bytes, expected {expected_size}")
    return bytes(out)
