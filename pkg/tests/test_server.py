"""Server protocol: seats, message set, broadcasts, and wire equivalence."""

import asyncio
import base64
import json

import pytest

from fourhammer.actions import id_to_action
from fourhammer.agents import RandomAgent
from fourhammer.encodings import encode_binary
from fourhammer.rules import apply_inplace, current_decision
from fourhammer.scenarios import make_scenario
from fourhammer.server import Server

PORT = 7615


class TcpClient:
    def __init__(self, reader, writer):
        self.reader = reader
        self.writer = writer
        self.broadcasts = []

    @classmethod
    async def connect(cls, port):
        reader, writer = await asyncio.open_connection("127.0.0.1", port)
        return cls(reader, writer)

    async def request(self, obj):
        self.writer.write((json.dumps(obj) + "\n").encode())
        await self.writer.drain()
        while True:
            line = await asyncio.wait_for(self.reader.readline(), timeout=5)
            msg = json.loads(line)
            if "broadcast" in msg:
                self.broadcasts.append(msg)
                continue
            return msg

    async def drain_broadcasts(self):
        try:
            while True:
                line = await asyncio.wait_for(self.reader.readline(), timeout=0.2)
                self.broadcasts.append(json.loads(line))
        except asyncio.TimeoutError:
            return

    def close(self):
        self.writer.close()


def run(coro):
    return asyncio.run(coro)


async def with_server(test, scenario="full_game", seed=1, port=PORT):
    srv = Server(scenario=scenario, seed=seed, port=port)
    await srv.start()
    try:
        await test(srv)
    finally:
        await srv.stop()


class TestSeats:
    def test_seat_claim_and_conflict(self):
        async def body(srv):
            a = await TcpClient.connect(PORT)
            b = await TcpClient.connect(PORT)
            assert (await a.request({"cmd": "seat", "seat": "p0"})) == {
                "ok": True, "seat": "p0"
            }
            rep = await b.request({"cmd": "seat", "seat": "p0"})
            assert rep == {"ok": False, "error": "seat_taken"}
            assert (await b.request({"cmd": "seat", "seat": "p1"}))["ok"]
            a.close(); b.close()
        run(with_server(body))

    def test_seat_released_on_disconnect(self):
        async def body(srv):
            a = await TcpClient.connect(PORT)
            await a.request({"cmd": "seat", "seat": "p0"})
            a.close()
            await asyncio.sleep(0.1)
            b = await TcpClient.connect(PORT)
            assert (await b.request({"cmd": "seat", "seat": "p0"}))["ok"]
            b.close()
        run(with_server(body))

    def test_wrong_seat_apply_rejected(self):
        async def body(srv):
            a = await TcpClient.connect(PORT)
            acts = await a.request({"cmd": "actions"})
            aid = acts["decision"]["options"][0]["id"]
            rep = await a.request({"cmd": "apply", "id": aid})
            assert rep == {"ok": False, "error": "not_your_turn"}
            a.close()
        run(with_server(body))


class TestMessages:
    def test_state_formats(self):
        async def body(srv):
            c = await TcpClient.connect(PORT)
            text = await c.request({"cmd": "state", "format": "text"})
            assert "PENDING DECISION" in text["state"]
            tensor = await c.request({"cmd": "state", "format": "tensor"})
            assert len(tensor["state"]) == 268
            doc = await c.request({"cmd": "state", "format": "json"})
            assert doc["state"]["format"] == "fourhammer-state"
            bad = await c.request({"cmd": "state", "format": "xml"})
            assert bad["error"] == "unknown_format"
            c.close()
        run(with_server(body))

    def test_unknown_and_malformed(self):
        async def body(srv):
            c = await TcpClient.connect(PORT)
            assert (await c.request({"cmd": "abracadabra"}))["error"] == "unknown_cmd"
            c.writer.write(b"this is not json\n")
            await c.writer.drain()
            rep = json.loads(await c.reader.readline())
            assert rep["error"] == "bad_json"
            # connection must still work afterwards
            assert (await c.request({"cmd": "actions"}))["ok"]
            c.close()
        run(with_server(body))

    def test_save_load_and_tamper(self):
        async def body(srv):
            c = await TcpClient.connect(PORT)
            save = await c.request({"cmd": "save"})
            raw = base64.b64decode(save["data"])
            assert raw[:4] == b"4HMR"
            assert (await c.request({"cmd": "load", "data": save["data"]}))["ok"]
            tampered = bytearray(raw)
            tampered[7] = 99  # player 0 command points out of range
            rep = await c.request({
                "cmd": "load",
                "data": base64.b64encode(bytes(tampered)).decode(),
            })
            assert rep["ok"] is False
            assert "bound" in rep.get("detail", "") or rep["error"] == "bad_state"
            c.close()
        run(with_server(body))

    def test_reset(self):
        async def body(srv):
            c = await TcpClient.connect(PORT)
            rep = await c.request({
                "cmd": "reset", "scenario": "single_shooting_maximize", "seed": 5
            })
            assert rep["ok"]
            acts = await c.request({"cmd": "actions"})
            assert acts["decision"]["kind"] == "select_shoot_unit"
            assert len(acts["decision"]["options"]) == 2
            c.close()
        run(with_server(body))

    def test_events_replay_gap_free(self):
        async def body(srv):
            c = await TcpClient.connect(PORT)
            await c.request({"cmd": "seat", "seat": "p0"})
            await c.request({"cmd": "seat", "seat": "p0"})
            evs = await c.request({"cmd": "events", "since": 0})
            ords = [e["ordinal"] for e in evs["events"]]
            assert ords == sorted(ords)
            if ords:
                assert ords == list(range(ords[0], ords[0] + len(ords)))
            c.close()
        run(with_server(body))


class TestBroadcasts:
    def test_spectator_sees_events_and_decisions(self):
        async def body(srv):
            player = await TcpClient.connect(PORT)
            spectator = await TcpClient.connect(PORT)
            await player.request({"cmd": "seat", "seat": "p0"})
            await player.request({"cmd": "seat", "seat": "p0"})
            acts = await player.request({"cmd": "actions"})
            actor = acts["decision"]["actor"]
            await player.request({"cmd": "seat", "seat": f"p{actor}"})
            aid = acts["decision"]["options"][0]["id"]
            rep = await player.request({"cmd": "apply", "id": aid})
            assert rep["ok"]
            await spectator.drain_broadcasts()
            kinds = {b["broadcast"] for b in spectator.broadcasts}
            assert "decision" in kinds
            player.close(); spectator.close()
        run(with_server(body))


class TestWireEquivalence:
    def test_full_game_over_tcp_matches_in_process(self):
        seed = 13

        # in-process reference run
        ref = make_scenario("full_game", seed)
        agent = RandomAgent(999)
        ids = []
        while ref.terminal is None:
            a = agent(ref)
            from fourhammer.actions import action_to_id
            ids.append(action_to_id(a))
            apply_inplace(ref, a)
        ref_bytes = encode_binary(ref)

        async def body(srv):
            c = await TcpClient.connect(PORT)
            await c.request({"cmd": "seat", "seat": "p0"})
            d = await TcpClient.connect(PORT)
            await d.request({"cmd": "seat", "seat": "p1"})
            clients = {0: c, 1: d}
            for aid in ids:
                acts = await c.request({"cmd": "actions"})
                actor = acts["decision"]["actor"]
                rep = await clients[actor].request({"cmd": "apply", "id": aid})
                assert rep["ok"], rep
            save = await c.request({"cmd": "save"})
            assert base64.b64decode(save["data"]) == ref_bytes
            c.close(); d.close()
        run(with_server(body, seed=seed))
