"""Action catalog, mask, tensor layout, and the three serializations."""

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fourhammer.actions import (
    Action, TOTAL_ACTION_IDS, action_to_id, id_to_action,
)
from fourhammer.board import GridPos, SequenceFrame, clone_state, states_equal
from fourhammer.encodings import (
    DecodeError, decode_binary, decode_json, describe_action, encode_binary,
    encode_json, encode_tensor, encode_text, legal_mask, TENSOR_LENGTH,
)
from fourhammer.rules import current_decision
from fourhammer.scenarios import make_scenario

from conftest import play_random


@pytest.fixture(scope="module")
def fuzzed_states():
    states = []
    seed = 0
    while len(states) < 120:
        play_random(seed, collect_states=states, state_stride=7)
        seed += 1
    return states[:120]


class TestActionCatalog:
    def test_total(self):
        assert TOTAL_ACTION_IDS == 1371

    def test_fixed_ids(self):
        assert action_to_id(Action("pass")) == 0
        assert action_to_id(Action("choose_first")) == 1
        assert action_to_id(Action("choose_second")) == 2
        assert action_to_id(Action("reroll_accept")) == 3
        assert action_to_id(Action("reroll_decline")) == 4
        assert action_to_id(Action("move_kind", 0)) == 5
        assert action_to_id(Action("select_unit", 0)) == 9
        assert action_to_id(Action("target_unit", 15)) == 40
        assert action_to_id(Action("allocate_model", 9)) == 50

    def test_square_formula(self):
        assert action_to_id(Action.at(GridPos(0, 0))) == 51
        assert action_to_id(Action.at(GridPos(43, 29))) == 1370
        assert action_to_id(Action.at(GridPos(10, 4))) == 51 + 4 * 44 + 10

    @given(st.integers(min_value=0, max_value=TOTAL_ACTION_IDS - 1))
    def test_bijection(self, i):
        assert action_to_id(id_to_action(i)) == i

    def test_all_ids_distinct(self):
        actions = [id_to_action(i) for i in range(TOTAL_ACTION_IDS)]
        assert len(set(actions)) == TOTAL_ACTION_IDS

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            id_to_action(TOTAL_ACTION_IDS)
        with pytest.raises(ValueError):
            id_to_action(-1)


class TestMask:
    def test_turn_order_mask(self):
        m = legal_mask(make_scenario("full_game", 0))
        assert m.shape == (TOTAL_ACTION_IDS,)
        assert list(np.flatnonzero(m)) == [1, 2]

    def test_popcount_equals_option_count(self, fuzzed_states):
        for s in fuzzed_states:
            dec = current_decision(s)
            assert int(legal_mask(s).sum()) == len(dec.options)

    def test_terminal_state_rejected(self):
        s, _, _ = play_random(2)
        with pytest.raises(ValueError):
            legal_mask(s)


class TestTensor:
    def test_length_and_bounds(self, fuzzed_states):
        for s in fuzzed_states:
            t = encode_tensor(s)
            assert t.shape == (TENSOR_LENGTH,)
            assert float(t.min()) >= 0.0
            assert float(t.max()) <= 1.0

    def test_fresh_round_component(self):
        t = encode_tensor(make_scenario("full_game", 0))
        assert t[0] == pytest.approx(0.2)

    def test_equal_states_equal_tensors(self):
        a = make_scenario("full_game", 5)
        b = make_scenario("full_game", 5)
        assert np.array_equal(encode_tensor(a), encode_tensor(b))

    def test_dead_unit_slot_zeroed(self, fuzzed_states):
        for s in fuzzed_states:
            t = encode_tensor(s)
            for u in s.units:
                if u.destroyed:
                    base = 24 + u.unit_id * 14
                    assert not t[base:base + 14].any()
                    return


class TestText:
    def test_sections_present(self):
        text = encode_text(make_scenario("full_game", 0))
        for section in ("GAME", "OBJECTIVES", "UNITS", "PENDING DECISION"):
            assert section in text

    def test_fresh_state_has_two_numbered_options(self):
        text = encode_text(make_scenario("full_game", 0))
        tail = text.split("PENDING DECISION")[1]
        assert "1: " in tail and "2: " in tail

    def test_deterministic(self):
        a = encode_text(make_scenario("full_game", 9))
        b = encode_text(make_scenario("full_game", 9))
        assert a == b

    def test_reroll_text_names_cp_cost_and_sum(self):
        s = make_scenario("full_game", 0)
        s.sequence_stack.append(
            SequenceFrame("charge_resolution", step=2,
                          locals={"r1": 3, "r2": 4, "needed": 9, "unit": 0})
        )
        accept = describe_action(s, "reroll_offer", Action("reroll_accept"))
        keep = describe_action(s, "reroll_offer", Action("reroll_decline"))
        assert "1 command point" in accept
        assert "3 + 4 = 7" in accept
        assert "3 + 4 = 7" in keep

    def test_terminal_state_renders_result(self):
        s, _, _ = play_random(2)
        text = encode_text(s)
        assert "RESULT" in text and "winner" in text


class TestJson:
    def test_roundtrip(self, fuzzed_states):
        for s in fuzzed_states[:40]:
            text = encode_json(s)
            back = decode_json(text)
            assert states_equal(s, back)
            assert encode_json(back) == text

    def test_tampered_cp_cites_bound(self):
        doc = json.loads(encode_json(make_scenario("full_game", 0)))
        doc["players"][0]["command_points"] = 99
        with pytest.raises(DecodeError) as e:
            decode_json(json.dumps(doc))
        assert "bound" in str(e.value)

    def test_empty_document(self):
        with pytest.raises(DecodeError):
            decode_json("")

    def test_wrong_format_marker(self):
        with pytest.raises(DecodeError):
            decode_json('{"format": "other"}')

    def test_version_mismatch(self):
        doc = json.loads(encode_json(make_scenario("full_game", 0)))
        doc["version"] = 99
        with pytest.raises(DecodeError) as e:
            decode_json(json.dumps(doc))
        assert "version" in str(e.value)


class TestBinary:
    def test_magic_and_roundtrip(self, fuzzed_states):
        for s in fuzzed_states[:40]:
            data = encode_binary(s)
            assert data[:4] == b"4HMR"
            back = decode_binary(data)
            assert states_equal(s, back)
            assert encode_binary(back) == data

    def test_bad_magic(self):
        data = bytearray(encode_binary(make_scenario("full_game", 0)))
        data[0] = ord("X")
        with pytest.raises(DecodeError) as e:
            decode_binary(bytes(data))
        assert "magic" in str(e.value)

    def test_truncation(self):
        data = encode_binary(make_scenario("full_game", 0))
        with pytest.raises(DecodeError):
            decode_binary(data[: len(data) // 2])

    def test_trailing_garbage(self):
        data = encode_binary(make_scenario("full_game", 0))
        with pytest.raises(DecodeError):
            decode_binary(data + b"\x00")

    def test_tampered_value_rejected(self):
        s = make_scenario("full_game", 0)
        s.players[0].victory_points = 61  # out of bounds
        data = encode_binary(s)
        with pytest.raises(DecodeError) as e:
            decode_binary(data)
        assert "bound" in str(e.value)

    def test_decoded_state_is_resumable(self):
        states = []
        play_random(3, collect_states=states, state_stride=25)
        for s in states:
            back = decode_binary(encode_binary(s))
            a = current_decision(s)
            b = current_decision(back)
            assert a.kind == b.kind and a.options == b.options
