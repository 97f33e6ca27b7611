/**
 * Thin DOM layer: paints the grid model, wires affordances to clicks.
 *
 * All decisions about what is clickable come from the affordance module;
 * this file only creates elements, applies classes, and forwards clicks
 * for cells/tokens/buttons that carry an action id. Out-of-turn and
 * illegal squares never get a handler, so clicking them does nothing.
 */

import { AffordanceSet, squareActionId, unitActionId } from "./affordances.js";
import { GridModel } from "./grid.js";
import { DecisionPayload, ResultPayload } from "./protocol.js";

export type ActCallback = (actionId: number) => void;

const FLAG_BADGES: Record<string, string> = {
  battle_shocked: "!",
  advanced: "A",
  fell_back: "F",
  declared_charge: "C",
  charged: "C+",
  shot: "S",
  fought: "X",
};

export function renderGrid(
  root: HTMLElement,
  grid: GridModel,
  affordances: AffordanceSet | null,
  mySeatActor: number | null,
  decisionActor: number | null,
  onAct: ActCallback
): void {
  root.textContent = "";
  const myTurn = mySeatActor !== null && mySeatActor === decisionActor;
  const board = document.createElement("div");
  board.className = "board";
  board.style.gridTemplateColumns = `repeat(${grid.width}, 1fr)`;

  for (const cell of grid.cells) {
    const el = document.createElement("div");
    el.className = "cell";
    if (cell.objectiveTint !== null) {
      el.classList.add(`objective-${cell.objectiveTint}`);
    }
    if (affordances !== null && myTurn) {
      const squareId = squareActionId(affordances, cell.x, cell.y);
      if (squareId !== null) {
        el.classList.add("clickable");
        el.addEventListener("click", () => onAct(squareId));
      }
    }
    if (cell.occupant !== null) {
      el.classList.add(`occupied-p${cell.occupant.owner}`);
    }
    board.appendChild(el);
  }

  for (const token of grid.tokens) {
    const el = document.createElement("div");
    el.className = `token owner-p${token.owner}`;
    el.style.gridColumnStart = String(token.x + 1);
    el.style.gridRowStart = String(token.y + 1);
    const badges = token.flags
      .map((f) => FLAG_BADGES[f] ?? "")
      .filter((b) => b !== "")
      .join("");
    el.textContent = `${token.name} ×${token.modelCount} (${token.woundsRemaining}W)${
      badges ? " " + badges : ""
    }`;
    if (affordances !== null && myTurn) {
      const unitId = unitActionId(affordances, token.unitId);
      if (unitId !== null) {
        el.classList.add("clickable");
        el.addEventListener("click", () => onAct(unitId));
      }
    }
    board.appendChild(el);
  }

  root.appendChild(board);
}

export function renderButtons(
  root: HTMLElement,
  affordances: AffordanceSet | null,
  decision: DecisionPayload | null,
  mySeatActor: number | null,
  onAct: ActCallback
): void {
  root.textContent = "";
  if (affordances === null || decision === null) return;
  const myTurn = mySeatActor !== null && mySeatActor === decision.actor;

  const heading = document.createElement("div");
  heading.className = "decision-kind";
  heading.textContent = myTurn
    ? `Your decision: ${decision.kind}`
    : `Waiting for player ${decision.actor}: ${decision.kind}`;
  root.appendChild(heading);

  for (const button of affordances.buttons) {
    const el = document.createElement("button");
    el.textContent = button.label;
    el.disabled = !myTurn;
    if (myTurn) el.addEventListener("click", () => onAct(button.id));
    root.appendChild(el);
  }
}

export function renderResult(root: HTMLElement, result: ResultPayload): void {
  root.textContent = "";
  const panel = document.createElement("div");
  panel.className = "result";
  const outcome =
    result.winner === "draw" ? "Draw" : `${result.winner} wins`;
  panel.textContent = `${outcome} — VP ${result.vp[0]} : ${result.vp[1]}${
    result.budget_exhausted ? " (decision budget exhausted)" : ""
  }`;
  root.appendChild(panel);
}

export function renderBanner(root: HTMLElement, message: string | null): void {
  root.textContent = message ?? "";
  root.classList.toggle("visible", message !== null);
}
