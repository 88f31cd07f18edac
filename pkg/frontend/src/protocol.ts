/**
 * Wire protocol of the bridge: JSON messages in a {type, seq, payload}
 * envelope. Parsing is defensive — a malformed message yields an error
 * string instead of an exception so the caller can drop it and keep the
 * previous scene.
 */

export type Vec3 = [number, number, number];

export interface CapsulePayload {
  id: string;
  a: Vec3;
  b: Vec3;
  r: number;
}

export interface StateFrame {
  t: number;
  robot_capsules: CapsulePayload[];
  human_capsules: CapsulePayload[];
  p_e: Vec3;
  p_g: Vec3;
  d_min: number | null;
  r1: Vec3 | null;
  r2: Vec3 | null;
  closest_pair: string;
  v_rel: number;
  v_rep_mod: number;
  gamma: number;
  beta: number;
  mode: string;
  qdot_cmd: number[];
}

export interface HelloPayload {
  model: string;
  dt: number;
  robot_capsules: CapsulePayload[];
  human_capsules: CapsulePayload[];
  params: Record<string, number>;
  human_speed_limit: number;
}

export type ServerMessage =
  | { type: "hello"; seq: number; payload: HelloPayload }
  | { type: "frame"; seq: number; payload: StateFrame }
  | { type: "ack"; seq: number; payload: Record<string, never> }
  | { type: "nack"; seq: number; payload: { reason: string } };

export type CommandPayload =
  | { action: "set_human_target"; capsule_id: string; a: Vec3; b: Vec3; max_speed: number }
  | { action: "pause" }
  | { action: "resume" }
  | { action: "reset" }
  | { action: "set_param"; name: string; value: number };

export function encodeCommand(seq: number, payload: CommandPayload): string {
  return JSON.stringify({ type: "command", seq, payload });
}

function isVec3(x: unknown): x is Vec3 {
  return Array.isArray(x) && x.length === 3 && x.every((v) => typeof v === "number" && isFinite(v));
}

function isCapsule(x: unknown): x is CapsulePayload {
  if (typeof x !== "object" || x === null) return false;
  const c = x as Record<string, unknown>;
  return typeof c.id === "string" && isVec3(c.a) && isVec3(c.b)
    && typeof c.r === "number" && c.r > 0;
}

function validFrame(p: Record<string, unknown>): boolean {
  return typeof p.t === "number"
    && Array.isArray(p.robot_capsules) && p.robot_capsules.every(isCapsule)
    && Array.isArray(p.human_capsules) && p.human_capsules.every(isCapsule)
    && isVec3(p.p_e) && isVec3(p.p_g)
    && (p.d_min === null || typeof p.d_min === "number")
    && (p.r1 === null || isVec3(p.r1)) && (p.r2 === null || isVec3(p.r2))
    && typeof p.mode === "string"
    && Array.isArray(p.qdot_cmd);
}

function validHello(p: Record<string, unknown>): boolean {
  return typeof p.model === "string" && typeof p.dt === "number" && p.dt > 0
    && Array.isArray(p.robot_capsules) && p.robot_capsules.every(isCapsule)
    && Array.isArray(p.human_capsules) && p.human_capsules.every(isCapsule)
    && typeof p.params === "object" && p.params !== null;
}

/** Parse one raw websocket message; returns the message or an error string. */
export function parseMessage(raw: string): ServerMessage | { error: string } {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch (e) {
    return { error: `not JSON: ${e}` };
  }
  if (typeof doc !== "object" || doc === null) return { error: "not an object" };
  const m = doc as Record<string, unknown>;
  if (typeof m.type !== "string" || typeof m.seq !== "number") {
    return { error: "missing type/seq envelope" };
  }
  const payload = (m.payload ?? {}) as Record<string, unknown>;
  switch (m.type) {
    case "hello":
      return validHello(payload)
        ? ({ type: "hello", seq: m.seq, payload } as unknown as ServerMessage)
        : { error: "malformed hello payload" };
    case "frame":
      return validFrame(payload)
        ? ({ type: "frame", seq: m.seq, payload } as unknown as ServerMessage)
        : { error: "malformed frame payload" };
    case "ack":
      return { type: "ack", seq: m.seq, payload: {} };
    case "nack":
      return { type: "nack", seq: m.seq, payload: { reason: String(payload.reason ?? "") } };
    default:
      return { error: `unknown message type ${m.type}` };
  }
}

/**
 * Distance below which the closest-pair witness line is drawn in the
 * warning color: the critical distance plus the (speed-grown) influence
 * band, mirroring the controller's activation region.
 */
export function warningDistance(params: Record<string, number>, vRel: number): number {
  const dCr = params.d_cr ?? 0;
  const d1 = params.d_1 ?? 0;
  const cV = params.c_v ?? 0;
  const d0 = vRel < 0 ? d1 - cV * vRel : d1;
  return dCr + d0;
}
