/**
 * Client <-> native-harness parity: a scripted episode driven through this
 * SDK must land on the same trajectory digest the in-process harness
 * produces for the same task and seed, and client-side hook overrides must
 * never move that digest.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { RemoteEnvironment } from "../src/env.js";
import { ServerError } from "../src/connection.js";
import { scriptedJointActions } from "../src/scripts.js";
import { SpawnedServer, nativeDigest, startServer } from "./server.js";

let server: SpawnedServer;

beforeAll(async () => {
  server = await startServer();
}, 30_000);

afterAll(async () => {
  await server.stop();
});

async function scriptedEpisode(
  env: RemoteEnvironment,
  task: string,
  seed: number,
  maxSteps?: number,
  sendObservations = false,
): Promise<{ steps: number; digest: string }> {
  await env.configure(task, seed, undefined, { send_observations: sendObservations });
  let state = await env.reset();
  let digest = state.digest;
  let steps = 0;
  for (;;) {
    const snapshot = env.lastSnapshot!;
    const result = await env.step(scriptedJointActions(snapshot));
    digest = result.digest;
    steps += 1;
    if (result.done || (maxSteps !== undefined && steps >= maxSteps)) {
      return { steps, digest };
    }
  }
}

const CASES: { task: string; seed: number; steps?: number }[] = [
  { task: "metal_clash_5lc_5mc", seed: 3 },
  { task: "metal_clash_het_10", seed: 8 }, // drones: exercises the heal branch
  { task: "monster_crisis_easy", seed: 0 },
  { task: "flag_capture_1script", seed: 1, steps: 60 },
  { task: "flag_capture_2scripts", seed: 4, steps: 40 }, // three-team possession
  { task: "navigation_game_5_vs_2", seed: 2 },
];

describe("scripted-episode parity with the native harness", () => {
  for (const { task, seed, steps } of CASES) {
    it(
      `${task} seed ${seed}`,
      async () => {
        const native = await nativeDigest(task, seed, steps);
        const env = await RemoteEnvironment.connect("127.0.0.1", server.port);
        const remote = await scriptedEpisode(env, task, seed, steps);
        env.close();
        expect(remote.steps).toBe(native.steps);
        expect(remote.digest).toBe(native.digest);
      },
      120_000,
    );
  }
});

describe("hook locality", () => {
  it(
    "custom makeObs/makeReward leave the trajectory digest unchanged",
    async () => {
      const plain = await RemoteEnvironment.connect("127.0.0.1", server.port);
      const baseline = await scriptedEpisode(plain, "monster_crisis_easy", 5, undefined, true);
      plain.close();

      const hooked = await RemoteEnvironment.connect("127.0.0.1", server.port, {
        makeObs: (snapshot) => {
          const out: Record<string, number[]> = {};
          for (const a of snapshot.agents) {
            out[String(a.id)] = [a.pos[0], a.pos[1], a.pos[2]];
          }
          return out;
        },
        makeReward: (_snapshot, rewards) => {
          const zeros: Record<string, number> = {};
          for (const k of Object.keys(rewards)) zeros[k] = 0;
          return zeros;
        },
      });
      await hooked.configure("monster_crisis_easy", 5, undefined, { send_observations: true });
      let state = await hooked.reset();
      expect(Object.values(state.obs).every((v) => v.length === 3)).toBe(true);
      let digest = state.digest;
      for (;;) {
        const result = await hooked.step(scriptedJointActions(hooked.lastSnapshot!));
        expect(Object.values(result.rewards).every((r) => r === 0)).toBe(true);
        digest = result.digest;
        if (result.done) break;
      }
      hooked.close();
      expect(digest).toBe(baseline.digest);
    },
    120_000,
  );

  it(
    "default hooks pass the server observations through",
    async () => {
      const env = await RemoteEnvironment.connect("127.0.0.1", server.port);
      await env.configure("metal_clash_het_10", 9, undefined, { send_observations: true });
      const state = await env.reset();
      const byKind: Record<string, number> = {};
      for (const agent of env.lastSnapshot!.agents) {
        byKind[agent.kind] = state.obs[String(agent.id)].length;
      }
      expect(byKind["missile_car"]).toBe(340);
      expect(byKind["laser_car"]).toBe(220);
      expect(byKind["support_drone"]).toBe(483);
      env.close();
    },
    60_000,
  );
});

describe("API sequencing", () => {
  it("step before configure/reset raises", async () => {
    const env = await RemoteEnvironment.connect("127.0.0.1", server.port);
    await expect(env.step({ 0: 0 })).rejects.toThrow(ServerError);
    env.close();
  });

  it(
    "step after done raises",
    async () => {
      const env = await RemoteEnvironment.connect("127.0.0.1", server.port);
      await env.configure("monster_crisis_easy", 7, undefined, { send_observations: false });
      await env.reset();
      for (;;) {
        const result = await env.step(scriptedJointActions(env.lastSnapshot!));
        if (result.done) break;
      }
      await expect(env.step({ 0: 0 })).rejects.toThrow(/done/);
      env.close();
    },
    60_000,
  );

  it(
    "reset twice with the same seed reproduces observations",
    async () => {
      const env = await RemoteEnvironment.connect("127.0.0.1", server.port);
      await env.configure("navigation_game_3_vs_2", 11, undefined, { send_observations: true });
      const first = await env.reset();
      const second = await env.reset();
      expect(second.digest).toBe(first.digest);
      expect(second.obs).toEqual(first.obs);
      env.close();
    },
    60_000,
  );

  it(
    "hello probe shows a frozen world between steps",
    async () => {
      const env = await RemoteEnvironment.connect("127.0.0.1", server.port);
      await env.configure("monster_crisis_easy", 1, undefined, { send_observations: false });
      await env.reset();
      await env.step(scriptedJointActions(env.lastSnapshot!));
      const probe1 = await env.hello();
      const probe2 = await env.hello();
      expect(probe1.frame_index).toBe(probe2.frame_index);
      env.close();
    },
    60_000,
  );
});
