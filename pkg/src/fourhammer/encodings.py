"""State encodings: legal-action mask, tensor, text, JSON, and binary.

The tensor is a flat 268-float vector with every component normalized to
[0, 1] using the declared bounds of each field:

    24 global  = round/5 + phase one-hot (6) + active player
                 + decision-kind one-hot (12) + CP0/10 + CP1/10 + VP0/60 + VP1/60
    224 units  = 16 slots x 14 (exists, owner, datasheet index/8, models alive/10,
                 wounds remaining fraction, anchor x/43, anchor y/29, 7 flag bits)
    20 markers = 4 x (x/43, y/29, control one-hot over p0/p1/contested)

The binary form starts with magic ``4HMR`` and a little-endian u16 version;
all integers are little-endian and field order is fixed, so re-encoding a
decoded state is byte-identical. The text form is render-only and feeds
LLM prompts; the JSON form is the lossless wire representation.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from . import board as B
from .actions import Action, TOTAL_ACTION_IDS, action_to_id, id_to_action
from .board import (
    DRAW, GameResult, GameState, GridPos, ModelState, ObjectiveMarker,
    PlayerState, SequenceFrame, UNIT_FLAGS, UnitState, objective_control,
    pos_from_idx, validate_state,
)
from .rng import RngStream
from .rules import (
    DECISION_KINDS, DecisionRequest, MOVE_KINDS, SEQUENCES, current_decision,
)
from .stats import Registry, parse_datasheet_file, render_registry

FORMAT_VERSION = 1
BINARY_MAGIC = b"4HMR"

TENSOR_LENGTH = 268

# 14 decision kinds grouped into the 12 one-hot slots of the tensor layout
# (deploy and fight pair their select/target steps).
_KIND_GROUP = {
    "choose_turn_order": 0,
    "deploy_unit": 1,
    "deploy_position": 1,
    "select_move_unit": 2,
    "choose_move_kind": 3,
    "move_target": 4,
    "select_shoot_unit": 5,
    "shoot_target": 6,
    "select_charge_unit": 7,
    "charge_target": 8,
    "reroll_offer": 9,
    "select_fight_unit": 10,
    "fight_target": 10,
    "allocate_model": 11,
}

_TENSOR_FLAGS = (
    "moved", "advanced", "fell_back", "shot", "charged_this_turn", "fought",
    "battle_shocked",
)


class DecodeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Mask and tensor
# ---------------------------------------------------------------------------

def legal_mask(s: GameState) -> np.ndarray:
    """uint8 bit vector of length 1371; raises on terminal states."""
    dec = current_decision(s)
    if isinstance(dec, GameResult):
        raise ValueError("legal_mask is undefined on terminal states")
    mask = np.zeros(TOTAL_ACTION_IDS, dtype=np.uint8)
    for a in dec.options:
        mask[action_to_id(a)] = 1
    return mask


def encode_tensor(s: GameState) -> np.ndarray:
    out = np.zeros(TENSOR_LENGTH, dtype=np.float32)
    out[0] = s.round / 5.0
    out[1 + B.PHASES.index(s.phase)] = 1.0
    out[7] = float(s.active_player)
    if s.terminal is None:
        dec = current_decision(s)
        out[8 + _KIND_GROUP[dec.kind]] = 1.0
    out[20] = s.players[0].command_points / 10.0
    out[21] = s.players[1].command_points / 10.0
    out[22] = s.players[0].victory_points / 60.0
    out[23] = s.players[1].victory_points / 60.0

    by_id = {u.unit_id: u for u in s.units}
    for slot in range(16):
        base = 24 + slot * 14
        u = by_id.get(slot)
        if u is None or u.destroyed:
            continue
        sheet = s.sheet(u)
        out[base + 0] = 1.0
        out[base + 1] = float(u.owner)
        out[base + 2] = (u.unit_id % 8) / 8.0
        out[base + 3] = u.alive_count() / 10.0
        out[base + 4] = sum(m.wounds_remaining for m in u.models) / sheet.total_wounds
        anchor = u.anchor().position
        out[base + 5] = anchor.x / (B.BOARD_W - 1)
        out[base + 6] = anchor.y / (B.BOARD_H - 1)
        for i, flag in enumerate(_TENSOR_FLAGS):
            out[base + 7 + i] = float(flag in u.flags)

    for i, marker in enumerate(s.objectives):
        base = 24 + 224 + i * 5
        out[base + 0] = marker.position.x / (B.BOARD_W - 1)
        out[base + 1] = marker.position.y / (B.BOARD_H - 1)
        control = objective_control(s, i)
        if control != "none":
            out[base + 2 + ("p0", "p1", "contested").index(control)] = 1.0
    return out


# ---------------------------------------------------------------------------
# Text rendering
# ---------------------------------------------------------------------------

def describe_action(s: GameState, kind: str, a: Action) -> str:
    """Human-readable phrase for one legal option of the pending decision."""
    f = s.sequence_stack[-1] if s.sequence_stack else None

    def uname(uid: int) -> str:
        return f'unit {uid} ("{s.unit(uid).datasheet_name}")'

    if kind == "choose_turn_order":
        return "take the first turn" if a.op == "choose_first" else "take the second turn"
    if kind == "deploy_unit":
        return f"deploy {uname(a.arg)}"
    if kind == "deploy_position":
        p = a.square
        return f"place {uname(f.locals['dep_unit'])} at ({p.x}, {p.y})"
    if kind == "select_move_unit":
        return "end the movement phase" if a.op == "pass" else f"move {uname(a.arg)}"
    if kind == "choose_move_kind":
        return {
            "stationary": "remain stationary",
            "normal": "make a normal move",
            "advance": "advance (move + 1d6, no shooting or charging)",
            "fall_back": "fall back out of engagement (no shooting or charging)",
        }[MOVE_KINDS[a.arg]]
    if kind == "move_target":
        p = a.square
        return f"move {uname(f.locals['cur_unit'])} to ({p.x}, {p.y})"
    if kind == "select_shoot_unit":
        return "end the shooting phase" if a.op == "pass" else f"shoot with {uname(a.arg)}"
    if kind == "shoot_target":
        return f"shoot at {uname(a.arg)}"
    if kind == "select_charge_unit":
        return "end the charge phase" if a.op == "pass" else f"declare a charge with {uname(a.arg)}"
    if kind == "charge_target":
        return f"charge {uname(a.arg)}"
    if kind == "reroll_offer":
        r1, r2 = f.locals["r1"], f.locals["r2"]
        what = "charge roll" if f.sequence == "charge_resolution" else "battle-shock roll"
        if a.op == "reroll_accept":
            return f"spend 1 command point to reroll the {what} ({r1} + {r2} = {r1 + r2})"
        return f"keep the {what} ({r1} + {r2} = {r1 + r2})"
    if kind == "select_fight_unit":
        return f"fight with {uname(a.arg)}"
    if kind == "fight_target":
        return f"strike {uname(a.arg)}"
    if kind == "allocate_model":
        return f"allocate the wound to model {a.arg} of {uname(f.locals['target'])}"
    return str(a)


def encode_text(s: GameState) -> str:
    """Deterministic, sectioned plain-text rendering (LLM prompt input)."""
    lines = ["GAME"]
    lines.append(
        f"  round {s.round}  phase {s.phase}  active p{s.active_player}"
        f"  first p{s.first_player}"
    )
    for i, p in enumerate(s.players):
        lines.append(
            f"  p{i} {p.faction}  CP {p.command_points}  VP {p.victory_points}"
        )
    lines.append("OBJECTIVES")
    for i, marker in enumerate(s.objectives):
        lines.append(
            f"  {i}: ({marker.position.x}, {marker.position.y})"
            f" controller {objective_control(s, i)}"
        )
    lines.append("UNITS")
    for u in s.units:
        if u.destroyed:
            lines.append(f'  unit {u.unit_id} p{u.owner} "{u.datasheet_name}" destroyed')
            continue
        flags = ",".join(sorted(u.flags)) if u.flags else "-"
        lines.append(f'  unit {u.unit_id} p{u.owner} "{u.datasheet_name}" flags {flags}')
        sheet = s.sheet(u)
        for i, m in enumerate(u.models):
            if m.wounds_remaining == 0:
                continue
            lines.append(
                f"    model {i} at ({m.position.x}, {m.position.y})"
                f" wounds {m.wounds_remaining}/{sheet.wounds_per_model}"
            )
    dec = current_decision(s)
    if isinstance(dec, GameResult):
        lines.append("RESULT")
        winner = "draw" if dec.winner == DRAW else f"p{dec.winner}"
        lines.append(f"  winner {winner}  VP {dec.vp[0]}-{dec.vp[1]}")
        if dec.budget_exhausted:
            lines.append("  (decision budget exhausted)")
    else:
        lines.append("PENDING DECISION")
        lines.append(f"  kind {dec.kind}  actor p{dec.actor}")
        for a in dec.options:
            lines.append(f"  {action_to_id(a)}: {describe_action(s, dec.kind, a)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def state_to_dict(s: GameState) -> dict:
    return {
        "format": "fourhammer-state",
        "version": FORMAT_VERSION,
        "round": s.round,
        "phase": s.phase,
        "active_player": s.active_player,
        "first_player": s.first_player,
        "players": [
            {
                "faction": p.faction,
                "command_points": p.command_points,
                "victory_points": p.victory_points,
                "stratagem_used_this_phase": p.stratagem_used_this_phase,
            }
            for p in s.players
        ],
        "units": [
            {
                "unit_id": u.unit_id,
                "datasheet_name": u.datasheet_name,
                "owner": u.owner,
                "models": [
                    {"x": m.position.x, "y": m.position.y, "wounds": m.wounds_remaining}
                    for m in u.models
                ],
                "flags": sorted(u.flags),
            }
            for u in s.units
        ],
        "objectives": [
            {"x": o.position.x, "y": o.position.y, "radius": o.control_radius}
            for o in s.objectives
        ],
        "sequence_stack": [
            {
                "sequence": fr.sequence,
                "step": fr.step,
                "locals": {k: fr.locals[k] for k in sorted(fr.locals)},
            }
            for fr in s.sequence_stack
        ],
        "rng": {"state": s.rng.state, "draws": s.rng.draws},
        "decision_count": s.decision_count,
        "terminal": None
        if s.terminal is None
        else {
            "winner": s.terminal.winner,
            "vp": list(s.terminal.vp),
            "budget_exhausted": s.terminal.budget_exhausted,
        },
        "event_ordinal": s.event_ordinal,
        "scenario": s.scenario,
        "auto_resolve": s.auto_resolve,
        "stats": render_registry(s.registry),
    }


def encode_json(s: GameState) -> str:
    return json.dumps(state_to_dict(s), sort_keys=True, separators=(",", ":"))


def decode_json(text: str) -> GameState:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DecodeError(f"malformed document: {e}") from None
    if not isinstance(doc, dict) or doc.get("format") != "fourhammer-state":
        raise DecodeError("malformed document: not a fourhammer state")
    if doc.get("version") != FORMAT_VERSION:
        raise DecodeError(f"unsupported version: {doc.get('version')}")
    try:
        s = _state_from_dict(doc)
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise DecodeError(f"malformed document: {e}") from None
    _check_decoded(s)
    return s


def _state_from_dict(doc: dict) -> GameState:
    registry = parse_datasheet_file(doc["stats"])
    return GameState(
        round=doc["round"],
        phase=doc["phase"],
        active_player=doc["active_player"],
        first_player=doc["first_player"],
        players=[
            PlayerState(
                p["faction"], p["command_points"], p["victory_points"],
                bool(p["stratagem_used_this_phase"]),
            )
            for p in doc["players"]
        ],
        units=[
            UnitState(
                u["unit_id"],
                u["datasheet_name"],
                u["owner"],
                [ModelState(GridPos(m["x"], m["y"]), m["wounds"]) for m in u["models"]],
                set(u["flags"]),
            )
            for u in doc["units"]
        ],
        objectives=[
            ObjectiveMarker(GridPos(o["x"], o["y"]), o["radius"])
            for o in doc["objectives"]
        ],
        sequence_stack=[
            SequenceFrame(fr["sequence"], fr["step"], dict(fr["locals"]))
            for fr in doc["sequence_stack"]
        ],
        rng=RngStream(doc["rng"]["state"], doc["rng"]["draws"]),
        decision_count=doc["decision_count"],
        terminal=None
        if doc["terminal"] is None
        else GameResult(
            doc["terminal"]["winner"],
            tuple(doc["terminal"]["vp"]),
            bool(doc["terminal"]["budget_exhausted"]),
        ),
        event_ordinal=doc["event_ordinal"],
        scenario=doc["scenario"],
        auto_resolve=bool(doc["auto_resolve"]),
        registry=registry,
    )


def _check_decoded(s: GameState) -> None:
    violations = validate_state(s)
    if violations:
        raise DecodeError("bound violation on decode: " + "; ".join(violations))


# ---------------------------------------------------------------------------
# Binary
# ---------------------------------------------------------------------------

class _Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def u8(self, v: int):
        self.parts.append(struct.pack("<B", v))

    def u16(self, v: int):
        self.parts.append(struct.pack("<H", v))

    def u32(self, v: int):
        self.parts.append(struct.pack("<I", v))

    def u64(self, v: int):
        self.parts.append(struct.pack("<Q", v))

    def i32(self, v: int):
        self.parts.append(struct.pack("<i", v))

    def string(self, v: str):
        raw = v.encode("utf-8")
        self.u16(len(raw))
        self.parts.append(raw)

    def bytes(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError("truncated input")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self._take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def i32(self) -> int:
        return struct.unpack("<i", self._take(4))[0]

    def string(self) -> str:
        return self._take(self.u16()).decode("utf-8")


def encode_binary(s: GameState) -> bytes:
    w = _Writer()
    w.parts.append(BINARY_MAGIC)
    w.u16(FORMAT_VERSION)
    w.u8(s.round)
    w.u8(B.PHASES.index(s.phase))
    w.u8(s.active_player)
    w.u8(s.first_player)
    for p in s.players:
        w.string(p.faction)
        w.u8(p.command_points)
        w.u8(p.victory_points)
        w.u8(int(p.stratagem_used_this_phase))
    w.u8(len(s.units))
    for u in s.units:
        w.u8(u.unit_id)
        w.string(u.datasheet_name)
        w.u8(u.owner)
        w.u8(len(u.models))
        for m in u.models:
            w.u8(m.position.x)
            w.u8(m.position.y)
            w.u8(m.wounds_remaining)
        flags = 0
        for i, name in enumerate(UNIT_FLAGS):
            if name in u.flags:
                flags |= 1 << i
        w.u8(flags)
    w.u8(len(s.objectives))
    for o in s.objectives:
        w.u8(o.position.x)
        w.u8(o.position.y)
        w.u8(o.control_radius)
    w.u8(len(s.sequence_stack))
    for fr in s.sequence_stack:
        w.u8(SEQUENCES.index(fr.sequence))
        w.u16(fr.step)
        w.u8(len(fr.locals))
        for key in sorted(fr.locals):
            w.string(key)
            w.i32(fr.locals[key])
    w.u64(s.rng.state)
    w.u64(s.rng.draws)
    w.u32(s.decision_count)
    if s.terminal is None:
        w.u8(0)
    else:
        w.u8(1)
        w.u8(s.terminal.winner)
        w.u8(s.terminal.vp[0])
        w.u8(s.terminal.vp[1])
        w.u8(int(s.terminal.budget_exhausted))
    w.u32(s.event_ordinal)
    w.string(s.scenario)
    w.u8(int(s.auto_resolve))
    w.string(render_registry(s.registry))
    return w.bytes()


def decode_binary(data: bytes) -> GameState:
    r = _Reader(data)
    if r._take(4) != BINARY_MAGIC:
        raise DecodeError("bad magic: expected 4HMR header")
    version = r.u16()
    if version != FORMAT_VERSION:
        raise DecodeError(f"unsupported version: {version}")
    round_ = r.u8()
    phase_index = r.u8()
    if phase_index >= len(B.PHASES):
        raise DecodeError(f"bad phase index: {phase_index}")
    active = r.u8()
    first = r.u8()
    players = []
    for _ in range(2):
        faction = r.string()
        cp = r.u8()
        vp = r.u8()
        strat = r.u8()
        players.append(PlayerState(faction, cp, vp, bool(strat)))
    units = []
    for _ in range(r.u8()):
        unit_id = r.u8()
        name = r.string()
        owner = r.u8()
        models = []
        for _ in range(r.u8()):
            x, y, wounds = r.u8(), r.u8(), r.u8()
            models.append(ModelState(GridPos(x, y), wounds))
        flag_bits = r.u8()
        flags = {name_ for i, name_ in enumerate(UNIT_FLAGS) if flag_bits >> i & 1}
        units.append(UnitState(unit_id, name, owner, models, flags))
    objectives = []
    for _ in range(r.u8()):
        x, y, radius = r.u8(), r.u8(), r.u8()
        objectives.append(ObjectiveMarker(GridPos(x, y), radius))
    stack = []
    for _ in range(r.u8()):
        seq_index = r.u8()
        if seq_index >= len(SEQUENCES):
            raise DecodeError(f"bad sequence index: {seq_index}")
        step = r.u16()
        frame_locals = {}
        for _ in range(r.u8()):
            key = r.string()
            frame_locals[key] = r.i32()
        stack.append(SequenceFrame(SEQUENCES[seq_index], step, frame_locals))
    rng = RngStream(r.u64(), r.u64())
    decision_count = r.u32()
    terminal = None
    if r.u8():
        terminal = GameResult(r.u8(), (r.u8(), r.u8()), bool(r.u8()))
    event_ordinal = r.u32()
    scenario = r.string()
    auto_resolve = bool(r.u8())
    try:
        registry = parse_datasheet_file(r.string())
    except ValueError as e:
        raise DecodeError(f"bad embedded stats: {e}") from None
    if r.pos != len(r.data):
        raise DecodeError("trailing bytes after state")
    s = GameState(
        round=round_, phase=B.PHASES[phase_index], active_player=active,
        first_player=first, players=players, units=units, objectives=objectives,
        sequence_stack=stack, rng=rng, decision_count=decision_count,
        terminal=terminal, event_ordinal=event_ordinal, scenario=scenario,
        auto_resolve=auto_resolve, registry=registry,
    )
    _check_decoded(s)
    return s


def decision_to_dict(s: GameState, dec: DecisionRequest) -> dict:
    return {
        "kind": dec.kind,
        "actor": dec.actor,
        "options": [
            {"id": action_to_id(a), "text": describe_action(s, dec.kind, a)}
            for a in dec.options
        ],
    }
