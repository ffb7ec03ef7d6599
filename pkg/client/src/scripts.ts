/**
 * Built-in team scripts, mirror images of the server harness's scripted
 * policies. Parity matters: these must pick the same action ids from the
 * same snapshot, so every formula sticks to plain double arithmetic (sums,
 * products, comparisons) evaluated in the same order as the reference
 * implementation. No trig, no sqrt, no library math.
 */

import { AgentView, JointActions, Snapshot } from "./messages.js";

const MC_ATTACK_NEAREST = 5;
const MC_HEAL = 9;
const MOC_COLLIDE = 6;
const NAV_FLEE = 5;
const NAV_APPROACH = 6;

function d2(p: number[], q: number[]): number {
  const dx = q[0] - p[0];
  const dy = q[1] - p[1];
  const dz = q[2] - p[2];
  return dx * dx + dy * dy + dz * dz;
}

function hd2(p: number[], q: number[]): number {
  const dx = q[0] - p[0];
  const dy = q[1] - p[1];
  return dx * dx + dy * dy;
}

function myLiving(snapshot: Snapshot, teamId: number): AgentView[] {
  return snapshot.agents.filter((a) => a.team === teamId && a.alive);
}

function living(snapshot: Snapshot): AgentView[] {
  return snapshot.agents.filter((a) => a.alive);
}

/** Nearest of N/E/S/W (action ids 1..4); the x axis wins exact ties. */
export function quantize4Way(dx: number, dy: number): number {
  if (Math.abs(dx) >= Math.abs(dy)) {
    return dx > 0 ? 2 : 4;
  }
  return dy > 0 ? 1 : 3;
}

/** Index of the 45-degree heading nearest a bearing (max dot product,
 * lowest index on ties). */
export function headingAction(dx: number, dy: number): number {
  const s = 0.7071067811865476;
  const headings: [number, number][] = [
    [1.0, 0.0],
    [s, s],
    [0.0, 1.0],
    [-s, s],
    [-1.0, 0.0],
    [-s, -s],
    [0.0, -1.0],
    [s, -s],
  ];
  let bestK = 0;
  let bestDot = headings[0][0] * dx + headings[0][1] * dy;
  for (let k = 1; k < 8; k++) {
    const dot = headings[k][0] * dx + headings[k][1] * dy;
    if (dot > bestDot) {
      bestDot = dot;
      bestK = k;
    }
  }
  return bestK;
}

function metalClash(snapshot: Snapshot, teamId: number): JointActions {
  const actions: JointActions = {};
  const everyone = living(snapshot);
  const spawnCenters = snapshot.map.spawn_centers;
  const taskTeams = new Set(Object.keys(snapshot.teams).map(Number));
  for (const me of myLiving(snapshot, teamId)) {
    if (me.heal_rate > 0.0) {
      const sr2 = me.support_range * me.support_range;
      const hurt = everyone.some(
        (a) =>
          a.team === teamId && a.id !== me.id && a.hp < a.max_hp && d2(me.pos, a.pos) <= sr2,
      );
      if (hurt) {
        actions[me.id] = MC_HEAL;
        continue;
      }
    }
    const obs2 = me.obs_range * me.obs_range;
    const seen = everyone.some(
      (a) =>
        a.team !== teamId &&
        d2(me.pos, a.pos) <= obs2 &&
        (a.is_air ? me.can_attack_air : me.can_attack_ground),
    );
    if (seen) {
      actions[me.id] = MC_ATTACK_NEAREST;
      continue;
    }
    const enemyTeams = Object.keys(spawnCenters)
      .filter((t) => Number(t) !== teamId && taskTeams.has(Number(t)))
      .sort();
    const target = spawnCenters[enemyTeams[0]];
    actions[me.id] = quantize4Way(target[0] - me.pos[0], target[1] - me.pos[1]);
  }
  return actions;
}

function monsterCrisis(snapshot: Snapshot, teamId: number): JointActions {
  const actions: JointActions = {};
  for (const me of myLiving(snapshot, teamId)) {
    actions[me.id] = MOC_COLLIDE;
  }
  return actions;
}

function flagCapture(snapshot: Snapshot, teamId: number): JointActions {
  const flag = snapshot.entities.find((e) => e.kind === "flag");
  if (!flag) {
    throw new Error("flag_capture snapshot without a flag entity");
  }
  const holderId = snapshot.state["holder_id"] as number;
  const holderTeam = snapshot.state["holder_team"] as number;
  let holderPos: number[] | null = null;
  if (holderId >= 0 && holderTeam === teamId) {
    const holder = snapshot.agents.find((a) => a.id === holderId);
    holderPos = holder ? holder.pos : null;
  }
  const actions: JointActions = {};
  for (const me of myLiving(snapshot, teamId)) {
    let target = flag.pos;
    if (holderPos !== null && holderId !== me.id) {
      target = holderPos;
    }
    actions[me.id] = headingAction(target[0] - me.pos[0], target[1] - me.pos[1]);
  }
  return actions;
}

function navigationGame(snapshot: Snapshot, teamId: number): JointActions {
  const actions: JointActions = {};
  const everyone = living(snapshot);
  for (const me of myLiving(snapshot, teamId)) {
    if (me.kind === "ground_keeper") {
      actions[me.id] = NAV_APPROACH;
      continue;
    }
    if (me.is_air) {
      const evade2 = 600.0 * 600.0;
      const obs2 = me.obs_range * me.obs_range;
      const threatened = everyone.some(
        (a) =>
          a.team !== teamId &&
          !a.is_air &&
          hd2(me.pos, a.pos) <= evade2 &&
          d2(me.pos, a.pos) <= obs2,
      );
      actions[me.id] = threatened ? NAV_FLEE : NAV_APPROACH;
    } else {
      actions[me.id] = NAV_APPROACH;
    }
  }
  return actions;
}

const SCRIPTS: Record<string, (snapshot: Snapshot, teamId: number) => JointActions> = {
  metal_clash: metalClash,
  monster_crisis: monsterCrisis,
  flag_capture: flagCapture,
  navigation_game: navigationGame,
};

/** Actions the built-in script would take for one team, given a snapshot. */
export function scriptedActions(snapshot: Snapshot, teamId: number): JointActions {
  const script = SCRIPTS[snapshot.scenario];
  if (!script) {
    throw new Error(`no built-in script for scenario ${snapshot.scenario}`);
  }
  return script(snapshot, teamId);
}

/** Joint scripted action for every team in the snapshot. */
export function scriptedJointActions(snapshot: Snapshot): JointActions {
  const joint: JointActions = {};
  const teams = Object.keys(snapshot.teams)
    .map(Number)
    .sort((a, b) => a - b);
  for (const team of teams) {
    Object.assign(joint, scriptedActions(snapshot, team));
  }
  return joint;
}
