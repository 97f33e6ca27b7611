"""Top-level acceptance checks, one test per primary criterion.

Each test prints a single PASS/FAIL line (visible with ``pytest -s`` or in
captured output on failure) in addition to its assert.
"""

import asyncio
import base64
import json
import random
import time

import numpy as np
import pytest

from fourhammer.actions import action_to_id, id_to_action
from fourhammer.agents import RandomAgent
from fourhammer.board import DECISION_BUDGET, clone_state
from fourhammer.encodings import (
    decode_binary, decode_json, encode_binary, encode_json, encode_tensor,
    legal_mask,
)
from fourhammer.fuzz import run_fuzz
from fourhammer.rng import RngStream
from fourhammer.rules import (
    apply_inplace, current_decision, hit_threshold, save_threshold,
    wound_threshold,
)
from fourhammer.scenarios import make_scenario, reward
from fourhammer.server import Server

from conftest import play_random
from test_rules import (
    _sheet, _weapon, expected_damage_enumerated, simulate_damage,
)


def verdict(ok, name):
    print(f"{'PASS' if ok else 'FAIL'}: {name}")
    assert ok, name


class TestAcceptance:
    def test_fuzz_soundness(self):
        """1000 random games: zero violations, all terminal, under 60 s."""
        start = time.perf_counter()
        report = run_fuzz(1000, base_seed=1)  # raises FuzzViolation on any
        elapsed = time.perf_counter() - start
        ok = (
            len(report.games) == 1000
            and all(g.decisions <= DECISION_BUDGET for g in report.games)
            and not any(g.budget_exhausted for g in report.games)
            and elapsed < 60.0
        )
        verdict(ok, f"fuzz soundness (1000 games in {elapsed:.1f}s)")

    def test_determinism(self):
        """100 seeds x 2 runs: byte-identical terminal states and logs."""
        ok = True
        for seed in range(100):
            s1, _, e1 = play_random(seed)
            s2, _, e2 = play_random(seed)
            if encode_binary(s1) != encode_binary(s2) or e1 != e2:
                ok = False
                break
        verdict(ok, "determinism across 100 seeds x 2 runs")

    def test_encoding_round_trips(self):
        """1000 fuzzed mid-game states: lossless codecs, sane tensor/mask."""
        states = []
        seed = 500
        while len(states) < 1000:
            play_random(seed, collect_states=states, state_stride=5)
            seed += 1
        states = states[:1000]
        ok = True
        for s in states:
            data = encode_binary(s)
            if encode_binary(decode_binary(data)) != data:
                ok = False
                break
            text = encode_json(s)
            if encode_json(decode_json(text)) != text:
                ok = False
                break
            t = encode_tensor(s)
            if t.shape != (268,) or t.min() < 0.0 or t.max() > 1.0:
                ok = False
                break
            if s.terminal is None:
                if int(legal_mask(s).sum()) != len(current_decision(s).options):
                    ok = False
                    break
        verdict(ok, "encoding round trips on 1000 fuzzed states")

    def test_dice_oracle(self):
        """Monte Carlo vs enumeration; wound table; 2d6 frequency."""
        rng = RngStream(17)
        profile_rng = RngStream(7)
        mc_ok = True
        for _ in range(20):
            weapon = _weapon(
                attacks=1,
                skill=2 + profile_rng.next_below(5),
                strength=1 + profile_rng.next_below(12),
                ap=profile_rng.next_below(4),
                damage=1 + profile_rng.next_below(6),
            )
            target = _sheet(
                toughness=1 + profile_rng.next_below(10),
                save=2 + profile_rng.next_below(5),
                inv=None if profile_rng.next_below(2) else 4,
                wounds=1 + profile_rng.next_below(6),
            )
            exact = expected_damage_enumerated(weapon, target)
            if exact == 0:
                continue
            mc = simulate_damage(weapon, target, rng, 100_000)
            if abs(mc - exact) / exact >= 0.02:
                mc_ok = False

        table_ok = all(
            wound_threshold(s, t) == (
                2 if s >= 2 * t else 3 if s > t else 4 if s == t
                else 6 if 2 * s <= t else 5
            )
            for s in range(1, 11) for t in range(1, 11)
        )

        r = RngStream(43)
        hits = sum(1 for _ in range(1_000_000) if sum(r.next_2d6()) >= 7)
        freq_ok = abs(hits / 1_000_000 - 21 / 36) < 0.01

        verdict(mc_ok and table_ok and freq_ok, "dice oracle")

    def test_save_resume_equivalence(self):
        """Save at a random decision, reload, replay: identical event log."""
        picker = random.Random(99)
        ok = True
        for seed in range(100):
            _, ids, ref_events = play_random(seed)
            cut = picker.randrange(len(ids))

            events = []
            s = make_scenario("full_game", seed, events_out=events)
            for aid in ids[:cut]:
                events.extend(apply_inplace(s, id_to_action(aid)))
            resumed = decode_binary(encode_binary(s))
            for aid in ids[cut:]:
                events.extend(apply_inplace(resumed, id_to_action(aid)))
            if events != ref_events or encode_binary(resumed) != encode_binary(
                play_random(seed)[0]
            ):
                ok = False
                break
        verdict(ok, "save/resume equivalence over 100 games")

    def test_protocol_equivalence(self):
        """Full game over TCP == in-process application of the same ids."""
        seed = 77
        ref = make_scenario("full_game", seed)
        agent = RandomAgent(4242)
        ids = []
        while ref.terminal is None:
            a = agent(ref)
            ids.append(action_to_id(a))
            apply_inplace(ref, a)
        ref_bytes = encode_binary(ref)

        async def drive():
            srv = Server(scenario="full_game", seed=seed, port=7621)
            await srv.start()
            try:
                readers = {}
                for p in (0, 1):
                    r, w = await asyncio.open_connection("127.0.0.1", 7621)
                    readers[p] = (r, w)

                async def req(p, obj):
                    r, w = readers[p]
                    w.write((json.dumps(obj) + "\n").encode())
                    await w.drain()
                    while True:
                        msg = json.loads(await r.readline())
                        if "broadcast" not in msg:
                            return msg

                await req(0, {"cmd": "seat", "seat": "p0"})
                await req(1, {"cmd": "seat", "seat": "p1"})
                for aid in ids:
                    acts = await req(0, {"cmd": "actions"})
                    actor = acts["decision"]["actor"]
                    rep = await req(actor, {"cmd": "apply", "id": aid})
                    assert rep["ok"], rep
                save = await req(0, {"cmd": "save"})
                for _, w in readers.values():
                    w.close()
                return base64.b64decode(save["data"])
            finally:
                await srv.stop()

        wire_bytes = asyncio.run(drive())
        verdict(wire_bytes == ref_bytes, "protocol equivalence over TCP")

    def test_scenario_semantics(self):
        """Toy-scenario guarantees and zero-sum full-game rewards."""
        dec = current_decision(make_scenario("single_shooting_maximize", 0))
        two_choices = dec.kind == "select_shoot_unit" and len(dec.options) == 2

        st, _, _ = play_random(0, scenario="single_turn")
        one_turn = st.terminal is not None and st.round == 1

        zero_sum = all(
            reward(play_random(seed)[0], 0) + reward(play_random(seed)[0], 1) == 0
            for seed in range(10)
        )
        verdict(two_choices and one_turn and zero_sum, "scenario semantics")
