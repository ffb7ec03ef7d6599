/**
 * RemoteEnvironment: the episodic reset/step surface over a served world.
 *
 * The server remains the single source of truth for simulation state; the
 * hooks below only re-shape what this client hands to its caller. Overriding
 * them can never change the server-side trajectory.
 */

import { FrameConnection, ServerError } from "./connection.js";
import { MessageKind } from "./frames.js";
import {
  ConfigureAck,
  HelloBody,
  JointActions,
  Snapshot,
  StateBody,
  WireEvent,
  actionsToWire,
} from "./messages.js";

export type ObsHook = (
  snapshot: Snapshot,
  serverObs: Record<string, number[]> | undefined,
  events: WireEvent[],
) => Record<string, number[]>;

export type RewardHook = (
  snapshot: Snapshot,
  serverRewards: Record<string, number>,
  events: WireEvent[],
) => Record<string, number>;

export interface EnvHooks {
  makeObs?: ObsHook;
  makeReward?: RewardHook;
}

export interface StepResult {
  obs: Record<string, number[]>;
  rewards: Record<string, number>;
  done: boolean;
  events: WireEvent[];
  snapshot: Snapshot;
  digest: string;
}

export interface ResetResult {
  obs: Record<string, number[]>;
  snapshot: Snapshot;
  digest: string;
}

export interface TimeSettings {
  decision_interval?: number;
  frame_rate?: number;
  dilation?: number | "max";
}

export interface ConfigureOptions {
  send_observations?: boolean;
  trace_dir?: string;
}

const defaultObs: ObsHook = (_snapshot, serverObs) => serverObs ?? {};
const defaultReward: RewardHook = (_snapshot, serverRewards) => serverRewards;

export class RemoteEnvironment {
  private conn: FrameConnection;
  private hooks: Required<EnvHooks>;
  private configured = false;
  private episodeActive = false;
  private episodeDone = false;
  lastSnapshot: Snapshot | null = null;

  constructor(conn: FrameConnection, hooks: EnvHooks = {}) {
    this.conn = conn;
    this.hooks = {
      makeObs: hooks.makeObs ?? defaultObs,
      makeReward: hooks.makeReward ?? defaultReward,
    };
  }

  static async connect(host: string, port: number, hooks: EnvHooks = {}): Promise<RemoteEnvironment> {
    return new RemoteEnvironment(await FrameConnection.connect(host, port), hooks);
  }

  async hello(): Promise<HelloBody> {
    return (await this.conn.request(MessageKind.Hello, {})) as HelloBody;
  }

  async configure(
    task: string,
    seed = 0,
    time?: TimeSettings,
    options?: ConfigureOptions,
    mapId?: string,
  ): Promise<ConfigureAck> {
    const body: Record<string, unknown> = { task, seed };
    if (time) body.time = time;
    if (options) body.options = options;
    if (mapId) body.map = mapId;
    const ack = (await this.conn.request(MessageKind.Configure, body)) as ConfigureAck;
    this.configured = true;
    this.episodeActive = false;
    this.episodeDone = false;
    return ack;
  }

  async reset(seed?: number): Promise<ResetResult> {
    if (!this.configured) {
      throw new ServerError("configure before reset");
    }
    const body = seed === undefined ? {} : { seed };
    const state = (await this.conn.request(MessageKind.Reset, body)) as StateBody;
    this.episodeActive = true;
    this.episodeDone = false;
    this.lastSnapshot = state.snapshot;
    return {
      obs: this.hooks.makeObs(state.snapshot, state.obs, state.events),
      snapshot: state.snapshot,
      digest: state.digest,
    };
  }

  async step(actions: JointActions): Promise<StepResult> {
    if (!this.episodeActive) {
      throw new ServerError("reset before step");
    }
    if (this.episodeDone) {
      throw new ServerError("episode is done; reset before stepping");
    }
    const state = (await this.conn.request(MessageKind.StepRequest, {
      actions: actionsToWire(actions),
    })) as StateBody;
    this.episodeDone = state.done;
    this.lastSnapshot = state.snapshot;
    return {
      obs: this.hooks.makeObs(state.snapshot, state.obs, state.events),
      rewards: this.hooks.makeReward(state.snapshot, state.rewards, state.events),
      done: state.done,
      events: state.events,
      snapshot: state.snapshot,
      digest: state.digest,
    };
  }

  async shutdown(stopServer = false): Promise<void> {
    try {
      await this.conn.request(MessageKind.Shutdown, { stop_server: stopServer });
    } catch {
      // the server may close the pipe on its way out
    }
    this.conn.close();
  }

  close(): void {
    this.conn.close();
  }
}
