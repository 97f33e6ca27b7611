/**
 * Map a pending decision onto clickable UI affordances.
 *
 * Pure: given the decision payload the server broadcast, produce the set of
 * board squares, unit tokens, and panel buttons that should respond to a
 * click, each carrying the action id the click submits. Anything not in the
 * returned sets stays inert, so legality on screen mirrors the server's
 * option list exactly.
 */

import {
  DecisionPayload,
  squareFromId,
  unitFromSelectId,
  unitFromTargetId,
} from "./protocol.js";

export interface SquareAffordance {
  id: number;
  x: number;
  y: number;
}

export interface UnitAffordance {
  id: number;
  unitId: number;
  role: "select" | "target";
}

export interface ButtonAffordance {
  id: number;
  label: string;
}

export interface AffordanceSet {
  squares: SquareAffordance[];
  units: UnitAffordance[];
  buttons: ButtonAffordance[];
}

export function computeAffordances(decision: DecisionPayload): AffordanceSet {
  const squares: SquareAffordance[] = [];
  const units: UnitAffordance[] = [];
  const buttons: ButtonAffordance[] = [];

  for (const option of decision.options) {
    const square = squareFromId(option.id);
    if (square !== null) {
      squares.push({ id: option.id, x: square.x, y: square.y });
      continue;
    }
    const selected = unitFromSelectId(option.id);
    if (selected !== null) {
      units.push({ id: option.id, unitId: selected, role: "select" });
      continue;
    }
    const targeted = unitFromTargetId(option.id);
    if (targeted !== null) {
      units.push({ id: option.id, unitId: targeted, role: "target" });
      continue;
    }
    buttons.push({ id: option.id, label: option.text });
  }
  return { squares, units, buttons };
}

/** Every action id the current decision allows, ascending. */
export function affordanceIds(set: AffordanceSet): number[] {
  const ids = [
    ...set.squares.map((s) => s.id),
    ...set.units.map((u) => u.id),
    ...set.buttons.map((b) => b.id),
  ];
  return ids.sort((a, b) => a - b);
}

/** Resolve a click on a board square to an action id, or null if inert. */
export function squareActionId(
  set: AffordanceSet,
  x: number,
  y: number
): number | null {
  const hit = set.squares.find((s) => s.x === x && s.y === y);
  return hit ? hit.id : null;
}

/** Resolve a click on a unit token to an action id, or null if inert. */
export function unitActionId(set: AffordanceSet, unitId: number): number | null {
  const hit = set.units.find((u) => u.unitId === unitId);
  return hit ? hit.id : null;
}
