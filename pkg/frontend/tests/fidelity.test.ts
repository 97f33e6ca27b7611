/**
 * Affordance fidelity against a live engine server.
 *
 * Spawns the Python server, connects over WebSocket as both players, and at
 * 50 sampled decisions asserts the rendered affordance ids are exactly the
 * server's option ids — no extra clickable elements, none missing.
 */

import { spawn, ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { affordanceIds, computeAffordances } from "../src/affordances.js";
import { GameClient, SocketLike } from "../src/client.js";
import { BOARD_H, BOARD_W, DecisionPayload } from "../src/protocol.js";

const TCP_PORT = 7733;
const WS_URL = `ws://127.0.0.1:${TCP_PORT + 1}`;
const SAMPLE_DECISIONS = 50;

const makeSocket = (url: string): SocketLike =>
  new WebSocket(url) as unknown as SocketLike;

let server: ChildProcess;
const clients: GameClient[] = [];

function tryOnce(): Promise<boolean> {
  return new Promise((resolve) => {
    const probe = new WebSocket(WS_URL);
    probe.once("open", () => {
      probe.close();
      resolve(true);
    });
    probe.once("error", () => resolve(false));
  });
}

async function waitForServer(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt++) {
    if (await tryOnce()) return;
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error("server never came up");
}

async function connectClient(): Promise<GameClient> {
  const client = new GameClient(WS_URL, makeSocket);
  await client.connect();
  clients.push(client);
  return client;
}

// deterministic option sampling so failures replay
function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

beforeAll(async () => {
  server = spawn(
    "python3",
    [
      "-m",
      "fourhammer.cli",
      "serve",
      "--port",
      String(TCP_PORT),
      "--scenario",
      "full_game",
      "--seed",
      "5",
    ],
    { stdio: "ignore" }
  );
  await waitForServer();
}, 30_000);

afterAll(() => {
  for (const client of clients) client.close();
  server.kill();
});

describe("affordance fidelity", () => {
  it(
    `renders exactly the server's options at ${SAMPLE_DECISIONS} decisions`,
    async () => {
      const p0 = await connectClient();
      const p1 = await connectClient();
      expect(await p0.claimSeat("p0")).toBe(true);
      expect(await p1.claimSeat("p1")).toBe(true);
      await p0.reset("full_game", 5);

      const rand = lcg(2024);
      let sampled = 0;
      while (sampled < SAMPLE_DECISIONS) {
        const decision = (await p0.fetchDecision()) as DecisionPayload | null;
        expect(decision, "game ended before 50 decisions").not.toBeNull();
        const dec = decision!;

        const set = computeAffordances(dec);
        const rendered = affordanceIds(set);
        const expected = dec.options.map((o) => o.id).sort((a, b) => a - b);
        expect(rendered).toEqual(expected);

        for (const square of set.squares) {
          expect(square.x).toBeGreaterThanOrEqual(0);
          expect(square.x).toBeLessThan(BOARD_W);
          expect(square.y).toBeGreaterThanOrEqual(0);
          expect(square.y).toBeLessThan(BOARD_H);
        }
        for (const unit of set.units) {
          expect(unit.unitId).toBeGreaterThanOrEqual(0);
          expect(unit.unitId).toBeLessThan(16);
        }
        for (const button of set.buttons) {
          expect(button.label.length).toBeGreaterThan(0);
        }
        sampled += 1;

        const pick = dec.options[Math.floor(rand() * dec.options.length)];
        const actor = dec.actor === 0 ? p0 : p1;
        const reply = await actor.apply(pick.id);
        expect(reply.ok).toBe(true);
      }
    },
    120_000
  );

  it("keeps the out-of-turn seat inert server-side", async () => {
    const p0 = clients[0];
    const p1 = clients[1];
    const decision = await p0.fetchDecision();
    if (decision === null) return; // game finished during sampling
    const wrongSeat = decision.actor === 0 ? p1 : p0;
    const reply = await wrongSeat.apply(decision.options[0].id);
    expect(reply.ok).toBe(false);
    expect(reply.error).toBe("not_your_turn");
  }, 30_000);
});
