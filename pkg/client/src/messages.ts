/** Payload shapes exchanged with the simulation server (canonical JSON). */

export interface AgentView {
  id: number;
  team: number;
  kind: string;
  kind_index: number;
  pos: number[];
  vel: number[];
  heading: number[];
  hp: number;
  max_hp: number;
  max_speed: number;
  attack_range: number;
  obs_range: number;
  is_air: boolean;
  can_attack_air: boolean;
  can_attack_ground: boolean;
  heal_rate: number;
  support_range: number;
  n_actions: number;
  alive: boolean;
}

export interface EntityView {
  id: number;
  kind: string;
  pos: number[];
  extent: number[];
  scalars: Record<string, unknown>;
}

export interface MapView {
  id: string;
  bounds: { center: number[]; half: number[] };
  spawn_centers: Record<string, number[]>;
  landmarks: number[][];
  obstacles: { center: number[]; half: number[] }[];
}

export interface Snapshot {
  scenario: string;
  episode_step: number;
  frame_index: number;
  decision_index: number;
  done: boolean;
  seed: number;
  rng_state: string;
  digest: string;
  winners: number[];
  teams: Record<string, number[]>;
  agents: AgentView[];
  entities: EntityView[];
  state: Record<string, unknown>;
  map: MapView;
}

export interface WireEvent {
  kind: string;
  frame: number;
  subject: number;
  object: number | null;
  magnitude: number | null;
}

export interface StateBody {
  snapshot: Snapshot;
  obs?: Record<string, number[]>;
  rewards: Record<string, number>;
  events: WireEvent[];
  done: boolean;
  digest: string;
}

export interface ConfigureAck {
  ok: boolean;
  task: Record<string, unknown>;
  n_agents: number;
  agents: { id: number; team: number; kind: string; n_actions: number }[];
  map: MapView;
}

export interface HelloBody {
  proto: number;
  server: string;
  frame_index: number | null;
}

export type JointActions = Record<number, number>;

export function actionsToWire(actions: JointActions): Record<string, number> {
  const out: Record<string, number> = {};
  for (const [aid, action] of Object.entries(actions)) {
    out[String(aid)] = action;
  }
  return out;
}
