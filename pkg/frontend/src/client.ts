/**
 * WebSocket game client.
 *
 * Commands are answered in order on a connection, so replies are matched to
 * requests FIFO; frames carrying a `broadcast` key are pushed to listeners
 * instead. The WebSocket constructor is injected so the browser build uses
 * the native implementation while headless tests supply the `ws` package.
 */

import {
  Broadcast,
  DecisionPayload,
  ResultPayload,
  ServerReply,
  StateJson,
  isBroadcast,
} from "./protocol.js";

/** The subset of the WebSocket interface the client relies on. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open" | "close", listener: () => void): void;
  addEventListener(
    type: "message",
    listener: (event: { data: unknown }) => void
  ): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientEvents {
  onDecision?: (decision: DecisionPayload) => void;
  onResult?: (result: ResultPayload) => void;
  onEvent?: (event: Broadcast & { broadcast: "event" }) => void;
  onClose?: () => void;
}

export class GameClient {
  private socket: SocketLike | null = null;
  private pending: Array<(reply: ServerReply) => void> = [];
  private listeners: ClientEvents;

  constructor(
    private url: string,
    private makeSocket: SocketFactory,
    listeners: ClientEvents = {}
  ) {
    this.listeners = listeners;
  }

  connect(): Promise<void> {
    return new Promise((resolve) => {
      const socket = this.makeSocket(this.url);
      socket.addEventListener("open", () => resolve());
      socket.addEventListener("close", () => {
        this.socket = null;
        this.listeners.onClose?.();
      });
      socket.addEventListener("message", (event) => {
        this.dispatch(String(event.data));
      });
      this.socket = socket;
    });
  }

  get connected(): boolean {
    return this.socket !== null;
  }

  close(): void {
    this.socket?.close();
  }

  private dispatch(raw: string): void {
    let msg: unknown;
    try {
      msg = JSON.parse(raw);
    } catch {
      return; // not ours to crash over; malformed frames are dropped
    }
    if (isBroadcast(msg)) {
      if (msg.broadcast === "decision") this.listeners.onDecision?.(msg.decision);
      else if (msg.broadcast === "result") this.listeners.onResult?.(msg.result);
      else this.listeners.onEvent?.(msg);
      return;
    }
    const resolve = this.pending.shift();
    resolve?.(msg as ServerReply);
  }

  request(cmd: string, fields: Record<string, unknown> = {}): Promise<ServerReply> {
    if (this.socket === null) {
      return Promise.reject(new Error("not connected"));
    }
    const socket = this.socket;
    return new Promise((resolve) => {
      this.pending.push(resolve);
      socket.send(JSON.stringify({ cmd, ...fields }));
    });
  }

  // Typed conveniences over the raw command set.

  async claimSeat(seat: "p0" | "p1"): Promise<boolean> {
    const reply = await this.request("seat", { seat });
    return reply.ok === true;
  }

  async reset(scenario: string, seed: number): Promise<ServerReply> {
    return this.request("reset", { scenario, seed });
  }

  async fetchState(): Promise<StateJson> {
    const reply = await this.request("state", { format: "json" });
    if (!reply.ok) throw new Error("state fetch failed");
    return reply.state as StateJson;
  }

  async fetchDecision(): Promise<DecisionPayload | null> {
    const reply = await this.request("actions");
    if (!reply.ok) throw new Error("actions fetch failed");
    return (reply.decision as DecisionPayload | null) ?? null;
  }

  async apply(id: number): Promise<ServerReply> {
    return this.request("apply", { id });
  }
}
