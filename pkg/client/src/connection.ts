/**
 * Framed TCP connection with strict request/response lockstep: one request
 * in flight, responses matched in order, ErrorReport surfaced as ServerError
 * carrying the server's text.
 */

import * as net from "node:net";

import {
  decodeHeader,
  decodePayload,
  encodeFrame,
  Frame,
  FrameError,
  HEADER_SIZE,
  MessageKind,
} from "./frames.js";

export class ServerError extends Error {}

export class ConnectionClosed extends Error {}

const RESPONSE_KIND: Partial<Record<MessageKind, MessageKind>> = {
  [MessageKind.Hello]: MessageKind.Hello,
  [MessageKind.Configure]: MessageKind.Configure,
  [MessageKind.Reset]: MessageKind.Reset,
  [MessageKind.StepRequest]: MessageKind.StepResponse,
  [MessageKind.Shutdown]: MessageKind.Shutdown,
};

export class FrameConnection {
  private socket: net.Socket;
  private buffer: Buffer = Buffer.alloc(0);
  private waiters: { resolve: (f: Frame) => void; reject: (e: Error) => void }[] = [];
  private closed = false;
  private sequence = 0;
  private pending: Promise<unknown> = Promise.resolve();

  private constructor(socket: net.Socket) {
    this.socket = socket;
    socket.on("data", (chunk) => this.onData(chunk));
    socket.on("error", (err) => this.fail(new ConnectionClosed(String(err))));
    socket.on("close", () => this.fail(new ConnectionClosed("connection closed")));
  }

  static connect(host: string, port: number, timeoutMs = 10000): Promise<FrameConnection> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port, noDelay: true });
      const timer = setTimeout(() => {
        socket.destroy();
        reject(new ConnectionClosed(`connect timeout to ${host}:${port}`));
      }, timeoutMs);
      socket.once("connect", () => {
        clearTimeout(timer);
        resolve(new FrameConnection(socket));
      });
      socket.once("error", (err) => {
        clearTimeout(timer);
        reject(err);
      });
    });
  }

  private onData(chunk: Buffer): void {
    this.buffer = Buffer.concat([this.buffer, chunk]);
    for (;;) {
      if (this.buffer.length < HEADER_SIZE) return;
      let header;
      try {
        header = decodeHeader(this.buffer.subarray(0, HEADER_SIZE));
      } catch (err) {
        this.fail(err as Error);
        return;
      }
      const total = HEADER_SIZE + header.payloadLength;
      if (this.buffer.length < total) return;
      const body = this.buffer.subarray(HEADER_SIZE, total);
      this.buffer = this.buffer.subarray(total);
      let payload: Buffer;
      try {
        payload = decodePayload(header.codec, body);
      } catch (err) {
        this.fail(err as Error);
        return;
      }
      const waiter = this.waiters.shift();
      if (waiter) {
        waiter.resolve({ kind: header.kind, sequence: header.sequence, payload });
      }
    }
  }

  private fail(error: Error): void {
    if (this.closed) return;
    this.closed = true;
    for (const waiter of this.waiters.splice(0)) {
      waiter.reject(error);
    }
  }

  private recvFrame(): Promise<Frame> {
    if (this.closed) {
      return Promise.reject(new ConnectionClosed("connection closed"));
    }
    return new Promise((resolve, reject) => this.waiters.push({ resolve, reject }));
  }

  /** Send one request and await its paired response (queued, lockstep). */
  request(kind: MessageKind, body: unknown): Promise<unknown> {
    const run = async (): Promise<unknown> => {
      this.sequence += 1;
      const payload = Buffer.from(JSON.stringify(body), "utf-8");
      this.socket.write(encodeFrame(kind, this.sequence, payload));
      const frame = await this.recvFrame();
      const parsed = JSON.parse(frame.payload.toString("utf-8"));
      if (frame.kind === MessageKind.ErrorReport) {
        throw new ServerError(parsed.error);
      }
      const expected = RESPONSE_KIND[kind];
      if (expected !== undefined && frame.kind !== expected) {
        throw new FrameError(`expected ${MessageKind[expected]}, got ${MessageKind[frame.kind]}`);
      }
      return parsed;
    };
    const result = this.pending.then(run, run);
    this.pending = result.catch(() => undefined);
    return result;
  }

  close(): void {
    this.closed = true;
    this.socket.destroy();
  }
}
