"""Network front-end: one game, many clients.

Newline-delimited JSON over TCP on ``port`` and identical payloads as text
frames over WebSocket on ``port + 1``. The session holds exactly one game;
clients claim seats ``p0``/``p1`` to apply actions, everyone else spectates.
All mutations run on the single asyncio event loop, so the server is the
sole writer of the game state; broadcasts fan out after each commit.

Message set (one JSON object per line/frame, replies carry ``ok``):

    reset {scenario, seed}    restart the session game
    seat {seat}               claim p0 or p1
    state {format}            text | json | tensor
    actions                   pending decision with numbered options
    apply {id} | {action}     apply an action for your seat
    save                      base64 of the binary state
    load {data}               replace the game from a base64 binary state
    events {since}            replay of the event log from an ordinal
"""

from __future__ import annotations

import asyncio
import base64
import json
import logging

import websockets

from .actions import Action, action_to_id, id_to_action
from .board import DRAW, GameState
from .encodings import (
    decision_to_dict, decode_binary, encode_binary, encode_json, encode_tensor,
    encode_text, DecodeError,
)
from .rules import (
    DecisionRequest, EventRecord, IllegalActionError, apply_inplace,
    current_decision,
)
from .scenarios import SCENARIOS, make_scenario
from .stats import Registry, load_registry

log = logging.getLogger("fourhammer.server")

DEFAULT_PORT = 7451
SEATS = ("p0", "p1")


def _event_to_dict(e: EventRecord) -> dict:
    return {"ordinal": e.ordinal, "kind": e.kind, "actor": e.actor,
            "payload": e.payload}


class Session:
    """One game plus its seat assignments and event log."""

    def __init__(self, scenario: str, seed: int, registry: Registry | None = None):
        self.registry = registry if registry is not None else load_registry()
        self.seats: dict[str, int | None] = {"p0": None, "p1": None}
        self.events: list[EventRecord] = []
        self.scenario = scenario
        self.seed = seed
        self.game: GameState = make_scenario(
            scenario, seed, self.registry, events_out=self.events
        )

    def reset(self, scenario: str, seed: int) -> None:
        if scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario: {scenario}")
        self.scenario = scenario
        self.seed = seed
        self.events = []
        self.game = make_scenario(scenario, seed, self.registry,
                                  events_out=self.events)

    def seat_of(self, client_id: int) -> str | None:
        for seat, holder in self.seats.items():
            if holder == client_id:
                return seat
        return None

    def release(self, client_id: int) -> None:
        for seat, holder in self.seats.items():
            if holder == client_id:
                self.seats[seat] = None


class Server:
    def __init__(self, scenario: str = "full_game", seed: int = 0,
                 port: int = DEFAULT_PORT, registry: Registry | None = None):
        self.session = Session(scenario, seed, registry)
        self.port = port
        self._next_client = 0
        # client id -> async callable(str) delivering one message
        self._clients: dict[int, object] = {}
        self._tcp_server = None
        self._ws_server = None

    # ------------------------------------------------------------------
    # Message handling (shared by both transports)
    # ------------------------------------------------------------------

    def handle(self, client_id: int, raw: str) -> tuple[dict, bool]:
        """Process one message; returns (reply, state_changed)."""
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError:
            return {"ok": False, "error": "bad_json"}, False
        if not isinstance(msg, dict) or "cmd" not in msg:
            return {"ok": False, "error": "bad_message"}, False
        cmd = msg["cmd"]
        handler = getattr(self, f"_cmd_{cmd}", None)
        if handler is None:
            return {"ok": False, "error": "unknown_cmd"}, False
        try:
            return handler(client_id, msg)
        except (KeyError, TypeError, ValueError) as e:
            return {"ok": False, "error": "bad_message", "detail": str(e)}, False

    def _cmd_reset(self, client_id: int, msg: dict):
        self.session.reset(msg["scenario"], int(msg.get("seed", 0)))
        return {"ok": True, "scenario": self.session.scenario,
                "seed": self.session.seed}, True

    def _cmd_seat(self, client_id: int, msg: dict):
        seat = msg["seat"]
        if seat not in SEATS:
            return {"ok": False, "error": "bad_seat"}, False
        holder = self.session.seats[seat]
        if holder is not None and holder != client_id:
            return {"ok": False, "error": "seat_taken"}, False
        self.session.release(client_id)
        self.session.seats[seat] = client_id
        return {"ok": True, "seat": seat}, False

    def _cmd_state(self, client_id: int, msg: dict):
        fmt = msg.get("format", "json")
        g = self.session.game
        if fmt == "text":
            return {"ok": True, "format": fmt, "state": encode_text(g)}, False
        if fmt == "json":
            return {"ok": True, "format": fmt,
                    "state": json.loads(encode_json(g))}, False
        if fmt == "tensor":
            return {"ok": True, "format": fmt,
                    "state": [float(v) for v in encode_tensor(g)]}, False
        return {"ok": False, "error": "unknown_format"}, False

    def _cmd_actions(self, client_id: int, msg: dict):
        g = self.session.game
        dec = current_decision(g)
        if not isinstance(dec, DecisionRequest):
            winner = "draw" if dec.winner == DRAW else f"p{dec.winner}"
            return {"ok": True, "decision": None,
                    "result": {"winner": winner, "vp": list(dec.vp)}}, False
        return {"ok": True, "decision": decision_to_dict(g, dec)}, False

    def _cmd_apply(self, client_id: int, msg: dict):
        g = self.session.game
        dec = current_decision(g)
        if not isinstance(dec, DecisionRequest):
            return {"ok": False, "error": "game_over"}, False
        seat = self.session.seat_of(client_id)
        if seat != f"p{dec.actor}":
            return {"ok": False, "error": "not_your_turn"}, False
        if "id" in msg:
            try:
                action = id_to_action(int(msg["id"]))
            except ValueError:
                return {"ok": False, "error": "bad_action_id"}, False
        elif "action" in msg:
            spec = msg["action"]
            action = Action(spec["op"], int(spec.get("arg", 0)))
        else:
            return {"ok": False, "error": "bad_message"}, False
        try:
            events = apply_inplace(g, action)
        except IllegalActionError as e:
            return {"ok": False, "error": "illegal_action", "detail": str(e)}, False
        self.session.events.extend(events)
        return {"ok": True, "applied": action_to_id(action),
                "events": [_event_to_dict(e) for e in events]}, True

    def _cmd_save(self, client_id: int, msg: dict):
        data = encode_binary(self.session.game)
        return {"ok": True, "data": base64.b64encode(data).decode("ascii")}, False

    def _cmd_load(self, client_id: int, msg: dict):
        try:
            raw = base64.b64decode(msg["data"], validate=True)
        except (ValueError, KeyError):
            return {"ok": False, "error": "bad_base64"}, False
        try:
            game = decode_binary(raw)
        except DecodeError as e:
            return {"ok": False, "error": "bad_state", "detail": str(e)}, False
        self.session.game = game
        self.session.events = []
        return {"ok": True}, True

    def _cmd_events(self, client_id: int, msg: dict):
        since = int(msg.get("since", 0))
        out = [_event_to_dict(e) for e in self.session.events
               if e.ordinal >= since]
        return {"ok": True, "events": out}, False

    # ------------------------------------------------------------------
    # Broadcast
    # ------------------------------------------------------------------

    def _broadcast_payloads(self, events: list[dict]) -> list[str]:
        out = [json.dumps({"broadcast": "event", "event": e}) for e in events]
        g = self.session.game
        dec = current_decision(g)
        if isinstance(dec, DecisionRequest):
            out.append(json.dumps({"broadcast": "decision",
                                   "decision": decision_to_dict(g, dec)}))
        else:
            winner = "draw" if dec.winner == DRAW else f"p{dec.winner}"
            out.append(json.dumps({
                "broadcast": "result",
                "result": {"winner": winner, "vp": list(dec.vp),
                           "budget_exhausted": dec.budget_exhausted},
            }))
        return out

    async def _broadcast(self, payloads: list[str]) -> None:
        for send in list(self._clients.values()):
            for payload in payloads:
                try:
                    await send(payload)
                except Exception:
                    pass  # dropped client; cleanup happens in its own handler

    async def _process(self, client_id: int, raw: str, send) -> None:
        """Handle one message: reply to the sender, then broadcast commits."""
        before = len(self.session.events)
        reply, changed = self.handle(client_id, raw)
        await send(json.dumps(reply))
        if changed:
            new_events = [_event_to_dict(e)
                          for e in self.session.events[before:]]
            await self._broadcast(self._broadcast_payloads(new_events))

    # ------------------------------------------------------------------
    # Transports
    # ------------------------------------------------------------------

    async def _tcp_client(self, reader: asyncio.StreamReader,
                          writer: asyncio.StreamWriter) -> None:
        client_id = self._next_client
        self._next_client += 1
        lock = asyncio.Lock()

        async def send(payload: str) -> None:
            async with lock:
                writer.write(payload.encode("utf-8") + b"\n")
                await writer.drain()

        self._clients[client_id] = send
        try:
            while True:
                line = await reader.readline()
                if not line:
                    break
                text = line.decode("utf-8", errors="replace").strip()
                if not text:
                    continue
                await self._process(client_id, text, send)
        except (ConnectionResetError, asyncio.IncompleteReadError):
            pass
        finally:
            self._clients.pop(client_id, None)
            self.session.release(client_id)
            writer.close()

    async def _ws_client(self, ws) -> None:
        client_id = self._next_client
        self._next_client += 1

        async def send(payload: str) -> None:
            await ws.send(payload)

        self._clients[client_id] = send
        try:
            async for raw in ws:
                if isinstance(raw, bytes):
                    raw = raw.decode("utf-8", errors="replace")
                await self._process(client_id, raw, send)
        except websockets.ConnectionClosed:
            pass
        finally:
            self._clients.pop(client_id, None)
            self.session.release(client_id)

    async def start(self) -> None:
        self._tcp_server = await asyncio.start_server(
            self._tcp_client, host="127.0.0.1", port=self.port
        )
        self._ws_server = await websockets.serve(
            self._ws_client, host="127.0.0.1", port=self.port + 1
        )
        log.info("listening on tcp:%d ws:%d", self.port, self.port + 1)

    async def stop(self) -> None:
        if self._tcp_server is not None:
            self._tcp_server.close()
            await self._tcp_server.wait_closed()
        if self._ws_server is not None:
            self._ws_server.close()
            await self._ws_server.wait_closed()

    async def serve_forever(self) -> None:
        await self.start()
        try:
            await asyncio.Event().wait()
        finally:
            await self.stop()


def serve(port: int, scenario: str, seed: int,
          registry: Registry | None = None) -> None:
    """Blocking entry point used by the CLI."""
    server = Server(scenario=scenario, seed=seed, port=port, registry=registry)
    try:
        asyncio.run(server.serve_forever())
    except KeyboardInterrupt:
        pass
