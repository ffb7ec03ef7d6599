import { describe, expect, it } from "vitest";

import {
  CODEC_LZ4,
  CODEC_RAW,
  FrameError,
  MessageKind,
  decodeHeader,
  decodePayload,
  encodeFrame,
  lz4BlockDecompress,
} from "../src/frames.js";

describe("frame header", () => {
  it("encodes a 16-byte header with big-endian fields", () => {
    const frame = encodeFrame(MessageKind.Hello, 0x01020304, Buffer.from("abc"));
    expect(frame.length).toBe(19);
    expect(frame.subarray(0, 4).toString("ascii")).toBe("UMAP");
    expect(frame[4]).toBe(1); // version
    expect(frame[5]).toBe(CODEC_RAW);
    expect(frame.readUInt16BE(6)).toBe(1); // Hello
    expect(frame.readUInt32BE(8)).toBe(0x01020304);
    expect(frame.readUInt32BE(12)).toBe(3);
  });

  it("round-trips through decodeHeader", () => {
    const frame = encodeFrame(MessageKind.StepRequest, 7, Buffer.from("{}"));
    const header = decodeHeader(frame.subarray(0, 16));
    expect(header.kind).toBe(MessageKind.StepRequest);
    expect(header.sequence).toBe(7);
    expect(header.payloadLength).toBe(2);
    expect(header.codec).toBe(CODEC_RAW);
  });

  it("rejects bad magic, version, codec and kind", () => {
    const good = encodeFrame(MessageKind.Hello, 1, Buffer.alloc(0));
    const badMagic = Buffer.from(good);
    badMagic.write("XMAP", 0, "ascii");
    expect(() => decodeHeader(badMagic)).toThrow(FrameError);
    const badVersion = Buffer.from(good);
    badVersion[4] = 9;
    expect(() => decodeHeader(badVersion)).toThrow(/version/);
    const badCodec = Buffer.from(good);
    badCodec[5] = 7;
    expect(() => decodeHeader(badCodec)).toThrow(/codec/);
    const badKind = Buffer.from(good);
    badKind.writeUInt16BE(999, 6);
    expect(() => decodeHeader(badKind)).toThrow(/message type/);
  });
});

// Fixtures produced by the server-side LZ4 block encoder.
const LZ4_VECTORS: [string, string][] = [
  ["", "00"],
  ["68656c6c6f20776f726c64", "b068656c6c6f20776f726c64"],
  ["616263616263616263616263616263616263616263616263616263616263616263", "3f616263030006506263616263"],
];

describe("lz4 block decoding", () => {
  it("decodes server-produced blocks", () => {
    for (const [rawHex, packedHex] of LZ4_VECTORS) {
      const raw = Buffer.from(rawHex, "hex");
      const packed = Buffer.from(packedHex, "hex");
      expect(lz4BlockDecompress(packed, raw.length).equals(raw)).toBe(true);
    }
  });

  it("decodes a run-length block (300 zero bytes)", () => {
    const packed = Buffer.from("1f000100ff14500000000000", "hex");
    const raw = lz4BlockDecompress(packed, 300);
    expect(raw.length).toBe(300);
    expect(raw.every((b) => b === 0)).toBe(true);
  });

  it("handles overlapping matches (repeated phrase)", () => {
    const phrase = "the quick brown fox jumps over the lazy dog. ".repeat(20);
    const packed = Buffer.from(
      "f01074686520717569636b2062726f776e20666f78206a756d7073206f766572201f00916c617a7920646f672e0e000f2d00ffffff3e50646f672e20",
      "hex",
    );
    expect(lz4BlockDecompress(packed, phrase.length).toString("ascii")).toBe(phrase);
  });

  it("decodes a whole compressed frame", () => {
    const wire = Buffer.from(
      "554d4150010100050000002a000000165e0200006f7b2278223a310100ffff4250313131317d",
      "hex",
    );
    const header = decodeHeader(wire.subarray(0, 16));
    expect(header.codec).toBe(CODEC_LZ4);
    expect(header.kind).toBe(MessageKind.StepResponse);
    expect(header.sequence).toBe(42);
    const payload = decodePayload(header.codec, wire.subarray(16, 16 + header.payloadLength));
    expect(payload.toString("utf-8")).toBe('{"x":' + "1".repeat(600) + "}");
  });

  it("rejects structural corruption", () => {
    expect(() => lz4BlockDecompress(Buffer.from([0x00, 0x00, 0x00]), 4)).toThrow(FrameError);
    const packed = Buffer.from("1f000100ff14500000000000", "hex");
    expect(() => lz4BlockDecompress(packed.subarray(0, 5), 300)).toThrow(FrameError);
    expect(() => lz4BlockDecompress(packed, 299)).toThrow(FrameError);
  });
});
