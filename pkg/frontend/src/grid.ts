/**
 * Pure board render model.
 *
 * Turns a JSON game state into a declarative description of what the grid
 * should show — cell tints, unit tokens, objective markers — without
 * touching the DOM. The DOM layer just paints whatever this module returns,
 * which keeps all the game-reading logic unit-testable.
 */

import { BOARD_H, BOARD_W, StateJson, UnitJson } from "./protocol.js";

export type Controller = "none" | "p0" | "p1" | "contested";

export interface TokenModel {
  unitId: number;
  name: string;
  owner: number;
  x: number;
  y: number; // anchor cell: the unit's first surviving model
  modelCount: number;
  woundsRemaining: number;
  flags: string[];
}

export interface ObjectiveModel {
  x: number;
  y: number;
  radius: number;
  controller: Controller;
}

export interface CellModel {
  x: number;
  y: number;
  objectiveTint: Controller | null;
  occupant: { unitId: number; owner: number } | null;
}

export interface GridModel {
  width: number;
  height: number;
  cells: CellModel[]; // row-major, y * width + x
  tokens: TokenModel[];
  objectives: ObjectiveModel[];
}

/** Objective-control stat per datasheet, parsed from the registry text. */
export function parseObjectiveControl(stats: string): Map<string, number> {
  const oc = new Map<string, number>();
  let current: string | null = null;
  for (const raw of stats.split("\n")) {
    const line = raw.trim();
    const unit = line.match(/^unit "([^"]+)"/);
    if (unit) {
      current = unit[1];
      continue;
    }
    const profile = line.match(/^profile\b.*\bOC (\d+)\s*$/);
    if (profile && current !== null) {
      oc.set(current, parseInt(profile[1], 10));
    }
    if (line === "end") current = null;
  }
  return oc;
}

function chebyshev(ax: number, ay: number, bx: number, by: number): number {
  return Math.max(Math.abs(ax - bx), Math.abs(ay - by));
}

function unitControlWeight(unit: UnitJson, oc: Map<string, number>): number {
  if (unit.flags.includes("battle_shocked")) return 0;
  return oc.get(unit.datasheet_name) ?? 0;
}

/** Who holds an objective: sum of OC per surviving model within the radius. */
export function objectiveController(
  state: StateJson,
  ox: number,
  oy: number,
  radius: number,
  oc: Map<string, number>
): Controller {
  const totals = [0, 0];
  for (const unit of state.units) {
    const weight = unitControlWeight(unit, oc);
    if (weight === 0) continue;
    for (const model of unit.models) {
      if (chebyshev(model.x, model.y, ox, oy) <= radius) {
        totals[unit.owner] += weight;
      }
    }
  }
  if (totals[0] === 0 && totals[1] === 0) return "none";
  if (totals[0] === totals[1]) return "contested";
  return totals[0] > totals[1] ? "p0" : "p1";
}

export function buildTokens(state: StateJson): TokenModel[] {
  const tokens: TokenModel[] = [];
  for (const unit of state.units) {
    if (unit.models.length === 0) continue;
    const anchor = unit.models[0];
    tokens.push({
      unitId: unit.unit_id,
      name: unit.datasheet_name,
      owner: unit.owner,
      x: anchor.x,
      y: anchor.y,
      modelCount: unit.models.length,
      woundsRemaining: unit.models.reduce((sum, m) => sum + m.wounds, 0),
      flags: unit.flags,
    });
  }
  return tokens;
}

export function buildGrid(state: StateJson): GridModel {
  const oc = parseObjectiveControl((state as { stats?: string }).stats ?? "");

  const objectives: ObjectiveModel[] = state.objectives.map((o) => ({
    x: o.x,
    y: o.y,
    radius: o.radius,
    controller: objectiveController(state, o.x, o.y, o.radius, oc),
  }));

  const cells: CellModel[] = [];
  for (let y = 0; y < BOARD_H; y++) {
    for (let x = 0; x < BOARD_W; x++) {
      cells.push({ x, y, objectiveTint: null, occupant: null });
    }
  }
  for (const o of objectives) {
    for (let y = Math.max(0, o.y - o.radius); y <= Math.min(BOARD_H - 1, o.y + o.radius); y++) {
      for (let x = Math.max(0, o.x - o.radius); x <= Math.min(BOARD_W - 1, o.x + o.radius); x++) {
        cells[y * BOARD_W + x].objectiveTint = o.controller;
      }
    }
  }
  for (const unit of state.units) {
    for (const model of unit.models) {
      const cell = cells[model.y * BOARD_W + model.x];
      cell.occupant = { unitId: unit.unit_id, owner: unit.owner };
    }
  }

  return {
    width: BOARD_W,
    height: BOARD_H,
    cells,
    tokens: buildTokens(state),
    objectives,
  };
}
