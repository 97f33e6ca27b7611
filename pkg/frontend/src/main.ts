/**
 * Browser entry point: connect, claim a seat, and play by clicking.
 */

import { computeAffordances, AffordanceSet } from "./affordances.js";
import { GameClient } from "./client.js";
import { buildGrid } from "./grid.js";
import { DecisionPayload, StateJson } from "./protocol.js";
import {
  renderBanner,
  renderButtons,
  renderGrid,
  renderResult,
} from "./render.js";

const params = new URLSearchParams(window.location.search);
const port = parseInt(params.get("port") ?? "7452", 10);
const seat = (params.get("seat") ?? "p0") as "p0" | "p1";
const url = `ws://127.0.0.1:${port}`;

const boardRoot = document.getElementById("board")!;
const panelRoot = document.getElementById("panel")!;
const bannerRoot = document.getElementById("banner")!;

let state: StateJson | null = null;
let decision: DecisionPayload | null = null;
let affordances: AffordanceSet | null = null;
const mySeatActor = seat === "p0" ? 0 : 1;

const client = new GameClient(url, (u) => new WebSocket(u), {
  onDecision: (d) => {
    decision = d;
    affordances = computeAffordances(d);
    void refreshState();
  },
  onResult: (r) => {
    decision = null;
    affordances = null;
    renderResult(panelRoot, r);
    void refreshState();
  },
  onClose: () => {
    renderBanner(bannerRoot, "Connection lost — refresh to reconnect");
  },
});

async function refreshState(): Promise<void> {
  state = await client.fetchState();
  repaint();
}

function repaint(): void {
  if (state === null) return;
  renderGrid(
    boardRoot,
    buildGrid(state),
    affordances,
    mySeatActor,
    decision?.actor ?? null,
    act
  );
  if (decision !== null) {
    renderButtons(panelRoot, affordances, decision, mySeatActor, act);
  }
}

function act(actionId: number): void {
  void client.apply(actionId);
}

async function start(): Promise<void> {
  await client.connect();
  renderBanner(bannerRoot, null);
  const seated = await client.claimSeat(seat);
  if (!seated) {
    renderBanner(bannerRoot, `Seat ${seat} is taken — spectating`);
  }
  decision = await client.fetchDecision();
  affordances = decision === null ? null : computeAffordances(decision);
  await refreshState();
  if (decision !== null) {
    renderButtons(panelRoot, affordances, decision, mySeatActor, act);
  }
}

void start();
