export {
  CODEC_LZ4,
  CODEC_RAW,
  FrameError,
  HEADER_SIZE,
  MAGIC,
  MessageKind,
  VERSION,
  decodeHeader,
  decodePayload,
  encodeFrame,
  lz4BlockDecompress,
} from "./frames.js";
export { ConnectionClosed, FrameConnection, ServerError } from "./connection.js";
export type {
  AgentView,
  ConfigureAck,
  EntityView,
  HelloBody,
  JointActions,
  MapView,
  Snapshot,
  StateBody,
  WireEvent,
} from "./messages.js";
export { actionsToWire } from "./messages.js";
export {
  RemoteEnvironment,
  type ConfigureOptions,
  type EnvHooks,
  type ObsHook,
  type ResetResult,
  type RewardHook,
  type StepResult,
  type TimeSettings,
} from "./env.js";
export { headingAction, quantize4Way, scriptedActions, scriptedJointActions } from "./scripts.js";
