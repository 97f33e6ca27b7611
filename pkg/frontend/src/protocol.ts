/**
 * Wire protocol types and the action-id catalog shared with the server.
 *
 * Payloads are identical over TCP and WebSocket; the UI only speaks the
 * WebSocket transport. Action ids form a fixed catalog so options can be
 * mapped onto board affordances without consulting the server twice.
 */

export const BOARD_W = 44;
export const BOARD_H = 30;
export const TOTAL_ACTION_IDS = 1371;

// catalog layout boundaries
export const ID_PASS = 0;
export const ID_CHOOSE_FIRST = 1;
export const ID_CHOOSE_SECOND = 2;
export const ID_REROLL_ACCEPT = 3;
export const ID_REROLL_DECLINE = 4;
export const ID_MOVE_KIND_BASE = 5; // 5..8
export const ID_SELECT_UNIT_BASE = 9; // 9..24
export const ID_TARGET_UNIT_BASE = 25; // 25..40
export const ID_ALLOCATE_BASE = 41; // 41..50
export const ID_SQUARE_BASE = 51; // 51..1370

export interface OptionPayload {
  id: number;
  text: string;
}

export interface DecisionPayload {
  kind: string;
  actor: number;
  options: OptionPayload[];
}

export interface ResultPayload {
  winner: string;
  vp: number[];
  budget_exhausted?: boolean;
}

export interface EventPayload {
  ordinal: number;
  kind: string;
  actor: number | null;
  payload: Record<string, number>;
}

export interface ModelJson {
  x: number;
  y: number;
  wounds: number;
}

export interface UnitJson {
  unit_id: number;
  datasheet_name: string;
  owner: number;
  models: ModelJson[];
  flags: string[];
}

export interface ObjectiveJson {
  x: number;
  y: number;
  radius: number;
}

export interface StateJson {
  round: number;
  phase: string;
  active_player: number;
  players: { faction: string; command_points: number; victory_points: number }[];
  units: UnitJson[];
  objectives: ObjectiveJson[];
  terminal: { winner: number; vp: number[] } | null;
}

export type ServerReply = { ok: boolean; [key: string]: unknown };

export type Broadcast =
  | { broadcast: "event"; event: EventPayload }
  | { broadcast: "decision"; decision: DecisionPayload }
  | { broadcast: "result"; result: ResultPayload };

export function isBroadcast(msg: unknown): msg is Broadcast {
  return typeof msg === "object" && msg !== null && "broadcast" in msg;
}

export function squareIdFor(x: number, y: number): number {
  return ID_SQUARE_BASE + y * BOARD_W + x;
}

export function squareFromId(id: number): { x: number; y: number } | null {
  if (id < ID_SQUARE_BASE || id >= TOTAL_ACTION_IDS) return null;
  const offset = id - ID_SQUARE_BASE;
  return { x: offset % BOARD_W, y: Math.floor(offset / BOARD_W) };
}

export function unitFromSelectId(id: number): number | null {
  if (id >= ID_SELECT_UNIT_BASE && id < ID_TARGET_UNIT_BASE) {
    return id - ID_SELECT_UNIT_BASE;
  }
  return null;
}

export function unitFromTargetId(id: number): number | null {
  if (id >= ID_TARGET_UNIT_BASE && id < ID_ALLOCATE_BASE) {
    return id - ID_TARGET_UNIT_BASE;
  }
  return null;
}
