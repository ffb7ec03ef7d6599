/**
 * Wire frames: 16-byte header + payload.
 *
 * Layout: magic "UMAP" | version u8 | codec u8 | msg type u16 BE |
 * sequence u32 BE | payload length u32 BE. Codec 1 payloads carry a u32 LE
 * decompressed size followed by one LZ4 block. The client sends raw frames
 * (its requests are tiny) but must decode both codecs, since the server
 * compresses responses opportunistically.
 */

export const MAGIC = Buffer.from("UMAP", "ascii");
export const VERSION = 1;
export const HEADER_SIZE = 16;

export const CODEC_RAW = 0;
export const CODEC_LZ4 = 1;

export enum MessageKind {
  Hello = 1,
  Configure = 2,
  Reset = 3,
  StepRequest = 4,
  StepResponse = 5,
  TraceChunk = 6,
  Shutdown = 7,
  ErrorReport = 8,
}

export class FrameError extends Error {}

export interface Frame {
  kind: MessageKind;
  sequence: number;
  payload: Buffer;
}

export function encodeFrame(kind: MessageKind, sequence: number, payload: Buffer): Buffer {
  const header = Buffer.alloc(HEADER_SIZE);
  MAGIC.copy(header, 0);
  header.writeUInt8(VERSION, 4);
  header.writeUInt8(CODEC_RAW, 5);
  header.writeUInt16BE(kind, 6);
  header.writeUInt32BE(sequence >>> 0, 8);
  header.writeUInt32BE(payload.length, 12);
  return Buffer.concat([header, payload]);
}

export interface ParsedHeader {
  codec: number;
  kind: MessageKind;
  sequence: number;
  payloadLength: number;
}

export function decodeHeader(header: Buffer): ParsedHeader {
  if (header.length < HEADER_SIZE) {
    throw new FrameError(`header is ${header.length} bytes, need ${HEADER_SIZE}`);
  }
  if (!header.subarray(0, 4).equals(MAGIC)) {
    throw new FrameError(`bad magic ${header.subarray(0, 4).toString("hex")}`);
  }
  const version = header.readUInt8(4);
  if (version !== VERSION) {
    throw new FrameError(`unknown version ${version}`);
  }
  const codec = header.readUInt8(5);
  if (codec !== CODEC_RAW && codec !== CODEC_LZ4) {
    throw new FrameError(`unknown codec ${codec}`);
  }
  const kind = header.readUInt16BE(6);
  if (!(kind in MessageKind)) {
    throw new FrameError(`unknown message type ${kind}`);
  }
  return {
    codec,
    kind: kind as MessageKind,
    sequence: header.readUInt32BE(8),
    payloadLength: header.readUInt32BE(12),
  };
}

export function decodePayload(codec: number, body: Buffer): Buffer {
  if (codec === CODEC_RAW) {
    return body;
  }
  if (body.length < 4) {
    throw new FrameError("compressed payload shorter than its size prefix");
  }
  const size = body.readUInt32LE(0);
  return lz4BlockDecompress(body.subarray(4), size);
}

/** Standard LZ4 block decoder (token / literals / offset / match copy). */
export function lz4BlockDecompress(block: Buffer, expectedSize: number): Buffer {
  const out = Buffer.alloc(expectedSize);
  let outPos = 0;
  let pos = 0;
  const n = block.length;
  if (n === 0) {
    throw new FrameError("empty LZ4 block");
  }
  for (;;) {
    if (pos >= n) {
      throw new FrameError("truncated LZ4 block: missing token");
    }
    const token = block[pos++];
    let literalLen = token >> 4;
    if (literalLen === 15) {
      for (;;) {
        if (pos >= n) throw new FrameError("truncated literal length");
        const extra = block[pos++];
        literalLen += extra;
        if (extra !== 255) break;
      }
    }
    if (pos + literalLen > n || outPos + literalLen > expectedSize) {
      throw new FrameError("literals overrun");
    }
    block.copy(out, outPos, pos, pos + literalLen);
    pos += literalLen;
    outPos += literalLen;
    if (pos === n) {
      break; // final literals-only sequence
    }
    if (pos + 2 > n) {
      throw new FrameError("truncated match offset");
    }
    const offset = block[pos] | (block[pos + 1] << 8);
    pos += 2;
    if (offset === 0 || offset > outPos) {
      throw new FrameError(`invalid match offset ${offset} at ${outPos}`);
    }
    let matchLen = (token & 0x0f) + 4;
    if ((token & 0x0f) === 15) {
      for (;;) {
        if (pos >= n) throw new FrameError("truncated match length");
        const extra = block[pos++];
        matchLen += extra;
        if (extra !== 255) break;
      }
    }
    if (outPos + matchLen > expectedSize) {
      throw new FrameError("match overruns expected size");
    }
    let src = outPos - offset;
    for (let i = 0; i < matchLen; i++) {
      out[outPos++] = out[src++]; // byte-wise: overlapping matches replicate
    }
  }
  if (outPos !== expectedSize) {
    throw new FrameError(`decoded ${outPos} bytes, expected ${expectedSize}`);
  }
  return out;
}
