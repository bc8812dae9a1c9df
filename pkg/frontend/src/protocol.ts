/**
 * Envelope types shared with the fleet service.
 *
 * The same JSON payloads travel over the browser socket bridge and the
 * REST endpoints; over the socket every request envelope is answered by
 * exactly one response envelope carrying the same id.
 */

export const PROTOCOL_VERSION = 1;

export interface Envelope {
  type: string;
  v: number;
  id: number | string;
  payload: Record<string, unknown>;
}

let nextRequestId = 1;

export function makeEnvelope(
  type: string,
  payload: Record<string, unknown>,
  id?: number | string,
): Envelope {
  return { type, v: PROTOCOL_VERSION, id: id ?? nextRequestId++, payload };
}

export interface NodeStatus {
  node_id: string;
  registered_at: number;
  last_seen: number;
  staleness: number;
  mode: string;
  tap: number;
  volts: number;
  transmittance: number;
  last_score: number;
  last_rating: number;
  before_score: number;
  before_rating: number;
  usage_count: number;
  total_usage: number;
  rounds_participated: number;
}

export interface StatusSnapshot {
  version: number;
  round_period_s: number;
  next_round_s: number;
  rounds_run: number;
  pending_updates: number;
  nodes: NodeStatus[];
}

export type OperatorCommand =
  | { action: "set_mode"; mode: "auto" | "manual" }
  | { action: "manual_tap"; tap: number };

export const TAP_MIN = 0;
export const TAP_MAX = 127;
export const VOLT_MIN = 1.49;
export const VOLT_MAX = 3.79;

export function tapToVolts(tap: number): number {
  return VOLT_MIN + (tap * (VOLT_MAX - VOLT_MIN)) / TAP_MAX;
}

/** Client-side gate: out-of-range taps never reach the wire. */
export function isValidTap(tap: number): boolean {
  return Number.isInteger(tap) && tap >= TAP_MIN && tap <= TAP_MAX;
}

export class CommandRejected extends Error {
  readonly code: string;

  constructor(code: string, message: string) {
    super(message);
    this.code = code;
  }
}
