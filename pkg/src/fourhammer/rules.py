"""The resumable sequence engine: phases, decisions, dice, and combat.

Gameplay is modeled as a stack of sequence frames, each a small state
machine with an integer program counter and integer locals. The engine
advances the top frame until it either reaches a decision step (a player
must choose among enumerated legal actions) or the game ends. Chance nodes
(dice) are resolved inline from the state's own RNG stream, so mid-sequence
states serialize and resume exactly.

Decisions whose option list has exactly one entry are applied automatically
(configurable via ``GameState.auto_resolve``) and do not count against the
decision budget.

Turn structure: a roll-off and alternating deployment, then five battle
rounds of two player turns, each turn running the command, movement,
shooting, charge, and fight phases in order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import board as B
from .actions import (
    ALLOCATE_MODEL, Action, CHOOSE_FIRST, CHOOSE_SECOND, MOVE_KIND, MOVE_KINDS,
    PASS, REROLL_ACCEPT, REROLL_DECLINE, SELECT_UNIT, TARGET_SQUARE, TARGET_UNIT,
    action_to_id,
)
from .board import (
    BOARD_H, BOARD_W, DECISION_BUDGET, DRAW, GameResult, GameState, GridPos,
    MAX_COMMAND_POINTS, MAX_VICTORY_POINTS, ModelState, ObjectiveMarker,
    OBJECTIVE_POSITIONS, PlayerState, SequenceFrame, UnitState, chebyshev_distance,
    clone_state, component_sizes, controlled_objectives, engaged_units,
    flood_collect, chain_pack, in_zone, is_engaged, occupied_map, pos_from_idx,
    threat_map, unit_coherent, validate_state,
)
from .rng import RngStream
from .stats import Datasheet, Registry, WeaponProfile

# Sequence names (fixed order; binary encoding indexes into this tuple)
SEQUENCES = (
    "game", "round", "turn", "command_phase", "movement_phase", "shooting_phase",
    "charge_phase", "fight_phase", "scoring", "single_attack", "roll_dice",
    "battle_shock_test", "charge_resolution",
)

DECISION_KINDS = (
    "choose_turn_order", "deploy_unit", "deploy_position", "select_move_unit",
    "choose_move_kind", "move_target", "select_shoot_unit", "shoot_target",
    "select_charge_unit", "charge_target", "reroll_offer", "select_fight_unit",
    "fight_target", "allocate_model",
)

EVENT_KINDS = (
    "phase_started", "dice_rolled", "reroll_used", "move_made", "damage_dealt",
    "model_slain", "unit_destroyed", "battle_shock_result", "charge_result",
    "vp_scored", "cp_changed", "game_over",
)

# dice_rolled payload 'purpose' codes
ROLL_PURPOSES = ("rolloff", "advance", "charge", "battle_shock", "hit", "wound", "save")

CHARGE_DECLARE_RANGE = 12
SCORE_PER_OBJECTIVE = 5
SCORE_CAP_PER_WINDOW = 15


class IllegalActionError(ValueError):
    pass


@dataclass(slots=True)
class EventRecord:
    ordinal: int
    kind: str
    actor: int | None
    payload: dict[str, int] = field(default_factory=dict)


@dataclass(slots=True)
class DecisionRequest:
    kind: str
    actor: int
    options: list[Action]


def _emit(s: GameState, ev: list[EventRecord], kind: str, actor: int | None, **payload: int):
    ev.append(EventRecord(s.event_ordinal, kind, actor, payload))
    s.event_ordinal += 1


def _roll(s: GameState, ev: list[EventRecord], purpose: str, n: int, actor: int,
          unit: int = -1) -> list[int]:
    values = [s.rng.next_d6() for _ in range(n)]
    payload = {"purpose": ROLL_PURPOSES.index(purpose), "n": n, "unit": unit}
    for i, v in enumerate(values, start=1):
        payload[f"d{i}"] = v
    _emit(s, ev, "dice_rolled", actor, **payload)
    return values


# ---------------------------------------------------------------------------
# Attack math
# ---------------------------------------------------------------------------

def hit_threshold(w: WeaponProfile) -> int:
    return w.skill


def wound_threshold(strength: int, toughness: int) -> int:
    if strength >= 2 * toughness:
        return 2
    if strength > toughness:
        return 3
    if strength == toughness:
        return 4
    if 2 * strength <= toughness:
        return 6
    return 5


def save_threshold(d: Datasheet, ap: int) -> int:
    """2..6 is a live save; 7 means no save is possible."""
    threshold = d.save + ap
    if d.invulnerable_save is not None:
        threshold = min(threshold, d.invulnerable_save)
    return min(threshold, 7)


def _below_half_strength(s: GameState, u: UnitState) -> bool:
    sheet = s.sheet(u)
    if sheet.models == 1:
        return u.models[0].wounds_remaining * 2 < sheet.wounds_per_model
    return u.alive_count() * 2 < sheet.models


# ---------------------------------------------------------------------------
# Movement geometry
# ---------------------------------------------------------------------------

def _free_map(s: GameState, exclude_unit: int) -> bytearray:
    occ = occupied_map(s, exclude_unit=exclude_unit)
    return bytearray(b ^ 1 for b in occ)


def _safe_map(s: GameState, u: UnitState) -> bytearray:
    """Squares that are free and outside enemy engagement range."""
    free = _free_map(s, u.unit_id)
    threat = threat_map(s, u.owner)
    return bytearray(f & (t ^ 1) for f, t in zip(free, threat))


def _nearest_model_distance(pos: GridPos, target: UnitState) -> int:
    return min(
        chebyshev_distance(pos, m.position)
        for m in target.models
        if m.wounds_remaining > 0
    )


def _unit_gap(a: UnitState, b: UnitState) -> int:
    """Smallest Chebyshev distance between alive models of two units."""
    b_alive = [m.position for m in b.models if m.wounds_remaining > 0]
    best = 999
    for m in a.models:
        if m.wounds_remaining == 0:
            continue
        for p in b_alive:
            d = chebyshev_distance(m.position, p)
            if d < best:
                best = d
    return best


def _destination_squares(s: GameState, u: UnitState, allowed: bytearray, budget: int,
                         include_anchor: bool) -> list[int]:
    labels, sizes = component_sizes(allowed)
    k = u.alive_count()
    ax, ay = u.anchor().position
    out = []
    anchor_idx = ay * BOARD_W + ax
    for y in range(max(0, ay - budget), min(BOARD_H, ay + budget + 1)):
        base = y * BOARD_W
        for x in range(max(0, ax - budget), min(BOARD_W, ax + budget + 1)):
            idx = base + x
            if allowed[idx] and sizes[labels[idx]] >= k:
                out.append(idx)
    if include_anchor and (not allowed[anchor_idx] or sizes[labels[anchor_idx]] < k):
        out.append(anchor_idx)  # staying in place is always legal
    return out


def _reposition(s: GameState, u: UnitState, dest_idx: int, allowed: bytearray) -> None:
    """Move the anchor to ``dest_idx`` and pack the other alive models around
    it in BFS order (deterministic, coherency-preserving)."""
    alive = u.alive_indices()
    anchor_idx = u.anchor().position.idx
    if dest_idx == anchor_idx:
        return
    squares = flood_collect(allowed, dest_idx, len(alive))
    assert len(squares) == len(alive), "packing feasibility was pre-checked"
    for model_index, square in zip(alive, squares):
        u.models[model_index].position = pos_from_idx(square)


def _fix_coherency(s: GameState, u: UnitState) -> None:
    """Re-pack survivors when a casualty breaks the coherency chain."""
    if u.destroyed or u.alive_count() <= 1 or unit_coherent(u):
        return
    allowed = _free_map(s, u.unit_id)
    alive = u.alive_indices()
    anchor_idx = u.models[alive[0]].position.idx
    allowed[anchor_idx] = 1
    squares = chain_pack(allowed, anchor_idx, len(alive))
    if len(squares) < len(alive):  # board effectively full; leave as-is
        return
    for model_index, square in zip(alive, squares):
        u.models[model_index].position = pos_from_idx(square)


# ---------------------------------------------------------------------------
# Terminal handling
# ---------------------------------------------------------------------------

def _finish(s: GameState, ev: list[EventRecord], winner: int, budget: bool = False) -> None:
    vp = (s.players[0].victory_points, s.players[1].victory_points)
    s.terminal = GameResult(winner, vp, budget)
    s.sequence_stack.clear()
    s.phase = "end"
    _emit(s, ev, "game_over", None, winner=winner, vp0=vp[0], vp1=vp[1])


def _finish_by_vp(s: GameState, ev: list[EventRecord]) -> None:
    vp0 = s.players[0].victory_points
    vp1 = s.players[1].victory_points
    winner = DRAW if vp0 == vp1 else (0 if vp0 > vp1 else 1)
    _finish(s, ev, winner)


def _check_wipeout(s: GameState, ev: list[EventRecord]) -> bool:
    alive0 = any(not u.destroyed for u in s.units if u.owner == 0)
    alive1 = any(not u.destroyed for u in s.units if u.owner == 1)
    if alive0 and alive1:
        return False
    if s.scenario == "single_shooting_maximize":
        return False  # this toy scenario ends via its own phase logic
    winner = 0 if alive0 else (1 if alive1 else DRAW)
    _finish(s, ev, winner)
    return True


# ---------------------------------------------------------------------------
# Phase helpers
# ---------------------------------------------------------------------------

def _phase_begin(s: GameState, ev: list[EventRecord], player: int, phase: str) -> None:
    s.active_player = player
    s.phase = phase
    for p in s.players:
        p.stratagem_used_this_phase = False
    _emit(s, ev, "phase_started", player, round=s.round, phase=B.PHASES.index(phase))


def _clear_flags(s: GameState, player: int, flags: tuple[str, ...]) -> None:
    for u in s.units:
        if u.owner == player:
            u.flags.difference_update(flags)


def _shoot_eligible_targets(s: GameState, u: UnitState) -> list[int]:
    ranged = s.sheet(u).ranged_weapons()
    if not ranged:
        return []
    max_range = max(w.range_squares for w in ranged)
    out = []
    for e in s.units:
        if e.owner == u.owner or e.destroyed:
            continue
        if is_engaged(s, e.unit_id):
            continue  # units in engagement cannot be shot
        if _unit_gap(u, e) <= max_range:
            out.append(e.unit_id)
    return out


def _can_shoot(s: GameState, u: UnitState) -> bool:
    if u.destroyed or "shot" in u.flags or "advanced" in u.flags or "fell_back" in u.flags:
        return False
    if is_engaged(s, u.unit_id):
        return False
    return bool(_shoot_eligible_targets(s, u))


def _charge_targets(s: GameState, u: UnitState) -> list[int]:
    anchor = u.anchor().position
    return [
        e.unit_id
        for e in s.units
        if e.owner != u.owner and not e.destroyed
        and _nearest_model_distance(anchor, e) <= CHARGE_DECLARE_RANGE
    ]


def _can_charge(s: GameState, u: UnitState) -> bool:
    if u.destroyed or "advanced" in u.flags or "fell_back" in u.flags:
        return False
    if "declared_charge" in u.flags or is_engaged(s, u.unit_id):
        return False
    return bool(_charge_targets(s, u))


def _fight_eligible(s: GameState, player: int, charged_only: bool) -> list[int]:
    out = []
    for u in s.units:
        if u.owner != player or u.destroyed or "fought" in u.flags:
            continue
        if charged_only and "charged_this_turn" not in u.flags:
            continue
        if is_engaged(s, u.unit_id):
            out.append(u.unit_id)
    return out


def _reroll_eligible(s: GameState, player: int, unit_id: int) -> bool:
    if s.players[player].command_points < 1:
        return False
    if s.players[player].stratagem_used_this_phase:
        return False
    return "battle_shocked" not in s.unit(unit_id).flags


# ---------------------------------------------------------------------------
# Sequence step functions
#
# Each returns True to continue advancing, or False to stop at a decision
# step (the pending decision is then derived from the top frame).
# ---------------------------------------------------------------------------

def _pop(s: GameState) -> bool:
    s.sequence_stack.pop()
    return True


def _step_game(s: GameState, f: SequenceFrame, ev: list[EventRecord]) -> bool:
    if f.step == 0:  # turn-order roll-off, rerolling ties
        while True:
            d0 = _roll(s, ev, "rolloff", 1, 0)[0]
            d1 = _roll(s, ev, "rolloff", 1, 1)[0]
            if d0 != d1:
                break
        f.locals["winner"] = 0 if d0 > d1 else 1
        f.step = 1
        return True
    if f.step == 1:  # choose_turn_order decision
        return False
    if f.step == 2:  # pick next deployer, or finish deployment
        deployed = f.locals.get("deployed", 0)
        remaining = [u for u in s.units if not deployed >> u.unit_id & 1]
        if not remaining:
            f.step = 5
            return True
        p = f.locals.get("dep_next", f.locals["winner"])
        if not any(u.owner == p for u in remaining):
            p = 1 - p
        f.locals["dep_actor"] = p
        return False  # deploy_unit decision
    if f.step == 3:
        return False  # deploy_position decision
    if f.step == 5:  # round loop
        next_round = f.locals.get("next_round", 1)
        limit = 1 if s.scenario == "single_turn" else B.MAX_ROUNDS
        if next_round > limit:
            _finish_by_vp(s, ev)
            return True
        s.round = next_round
        f.locals["next_round"] = next_round + 1
        s.sequence_stack.append(SequenceFrame("round"))
        return True
    raise AssertionError(f"game frame at bad step {f.step}")


def _step_round(s: GameState, f: SequenceFrame, ev: list[EventRecord]) -> bool:
    if f.step == 0:
        f.step = 1
        s.sequence_stack.append(SequenceFrame("turn", locals={"player": s.first_player}))
        return True
    if f.step == 1:
        f.step = 2
        s.sequence_stack.append(SequenceFrame("turn", locals={"player": 1 - s.first_player}))
        return True
    return _pop(s)


_TURN_PHASES = ("command_phase", "movement_phase", "shooting_phase", "charge_phase", "fight_phase")


def _step_turn(s: GameState, f: SequenceFrame, ev: list[EventRecord]) -> bool:
    if f.step < len(_TURN_PHASES):
        seq = _TURN_PHASES[f.step]
        f.step += 1
        s.sequence_stack.append(SequenceFrame(seq, locals={"player": f.locals["player"]}))
        return True
    return _pop(s)


def _step_command(s: GameState, f: SequenceFrame, ev: list[EventRecord]) -> bool:
    p = f.locals["player"]
    if f.step == 0:
        _phase_begin(s, ev, p, "command")
        _clear_flags(s, p, ("battle_shocked",))
        ps = s.players[p]
        if ps.command_points < MAX_COMMAND_POINTS:
            ps.command_points += 1
            _emit(s, ev, "cp_changed", p, delta=1, total=ps.command_points)
        f.locals["shock_scan"] = 0
        f.step = 1
        return True
    if f.step == 1:  # schedule battle-shock tests one at a time
        scan = f.locals["shock_scan"]
        for u in s.units:
            if u.unit_id < scan or u.owner != p or u.destroyed:
                continue
            if _below_half_strength(s, u):
                f.locals["shock_scan"] = u.unit_id + 1
                s.sequence_stack.append(
                    SequenceFrame("battle_shock_test", locals={"unit": u.unit_id})
                )
                return True
        f.step = 2
        return True
    if f.step == 2:
        f.step = 3
        if s.round >= 2:
            s.sequence_stack.append(SequenceFrame("scoring", locals={"player": p}))
        return True
    return _pop(s)


def _step_battle_shock(s: GameState, f: SequenceFrame, ev: list[EventRecord]) -> bool:
    u = s.unit(f.locals["unit"])
    p = u.owner
    if f.step == 0:
        r1, r2 = _roll(s, ev, "battle_shock", 2, p, unit=u.unit_id)
        f.locals["r1"], f.locals["r2"] = r1, r2
        f.step = 1
        return True
    if f.step == 1:
        if _reroll_eligible(s, p, u.unit_id):
            return False  # reroll_offer decision
        f.step = 2
        return True
    # resolve
    total = f.locals["r1"] + f.locals["r2"]
    leadership = s.sheet(u).leadership
    passed = total >= leadership
    if not passed:
        u.flags.add("battle_shocked")
    _emit(s, ev, "battle_shock_result", p, unit=u.unit_id,
          r1=f.locals["r1"], r2=f.locals["r2"], passed=int(passed))
    return _pop(s)


def _step_scoring(s: GameState, f: SequenceFrame, ev: list[EventRecord]) -> bool:
    p = f.locals["player"]
    n = controlled_objectives(s, p)
    gained = min(n * SCORE_PER_OBJECTIVE, SCORE_CAP_PER_WINDOW)
    ps = s.players[p]
    before = ps.victory_points
    ps.victory_points = min(before + gained, MAX_VICTORY_POINTS)
    _emit(s, ev, "vp_scored", p, objectives=n, amount=ps.victory_points - before,
          total=ps.victory_points)
    return _pop(s)


def _step_movement(s: GameState, f: SequenceFrame, ev: list[EventRecord]) -> bool:
    p = f.locals["player"]
    if f.step == 0:
        _phase_begin(s, ev, p, "movement")
        _clear_flags(s, p, ("moved", "advanced", "fell_back"))
        f.step = 1
        return True
    if f.step in (1, 2, 4):
        return False  # select_move_unit / choose_move_kind / move_target
    if f.step == 3:  # advance roll, then pick destination
        u = s.unit(f.locals["cur_unit"])
        roll = _roll(s, ev, "advance", 1, p, unit=u.unit_id)[0]
        f.locals["budget"] = s.sheet(u).move + roll
        f.step = 4
        return True
    return _pop(s)


def _step_shooting(s: GameState, f: SequenceFrame, ev: list[EventRecord]) -> bool:
    p = f.locals["player"]
    if f.step == 0:
        _phase_begin(s, ev, p, "shooting")
        _clear_flags(s, p, ("shot",))
        f.step = 1
        return True
    if f.step == 1:
        if s.scenario == "single_shooting_maximize":
            if any("shot" in u.flags for u in s.units if u.owner == p):
                _finish(s, ev, DRAW)
                return True
        return False  # select_shoot_unit
    if f.step == 2:
        return False  # shoot_target
    if f.step == 3:  # dispatch queued attacks one frame at a time
        if _dispatch_attack(s, f, ranged=True):
            return True
        f.step = 1
        return True
    return _pop(s)


def _dispatch_attack(s: GameState, f: SequenceFrame, ranged: bool) -> bool:
    """Push the next single_attack frame of the current activation, if any."""
    u = s.unit(f.locals["cur_unit"])
    target = s.unit(f.locals["cur_target"])
    if target.destroyed:
        return False
    sheet = s.sheet(u)
    weapon_indices = [
        i for i, w in enumerate(sheet.weapons)
        if (w.kind == "ranged") == ranged
    ]
    mi, wi, ai = f.locals["mi"], f.locals["wi"], f.locals["ai"]
    while mi < len(u.models):
        if u.models[mi].wounds_remaining == 0:
            mi, wi, ai = mi + 1, 0, 0
            continue
        if wi >= len(weapon_indices):
            mi, wi, ai = mi + 1, 0, 0
            continue
        weapon = sheet.weapons[weapon_indices[wi]]
        if ai >= weapon.attacks:
            wi, ai = wi + 1, 0
            continue
        f.locals["mi"], f.locals["wi"], f.locals["ai"] = mi, wi, ai + 1
        s.sequence_stack.append(SequenceFrame("single_attack", locals={
            "attacker": u.unit_id,
            "model": mi,
            "weapon": weapon_indices[wi],
            "target": target.unit_id,
        }))
        return True
    f.locals["mi"], f.locals["wi"], f.locals["ai"] = mi, wi, ai
    return False


def _step_single_attack(s: GameState, f: SequenceFrame, ev: list[EventRecord]) -> bool:
    attacker = s.unit(f.locals["attacker"])
    target = s.unit(f.locals["target"])
    weapon = s.sheet(attacker).weapons[f.locals["weapon"]]
    model = attacker.models[f.locals["model"]]

    if f.step == 0:
        if target.destroyed or model.wounds_remaining == 0:
            return _pop(s)
        if _nearest_model_distance(model.position, target) > weapon.range_squares:
            return _pop(s)
        roll = _roll(s, ev, "hit", 1, attacker.owner, unit=attacker.unit_id)[0]
        if roll < hit_threshold(weapon):
            return _pop(s)
        f.step = 1
        return True
    if f.step == 1:
        roll = _roll(s, ev, "wound", 1, attacker.owner, unit=attacker.unit_id)[0]
        if roll < wound_threshold(weapon.strength, s.sheet(target).toughness):
            return _pop(s)
        f.step = 2
        return True
    if f.step == 2:
        return False  # allocate_model decision (forced when a model is wounded)
    # step 3: save and damage
    sheet = s.sheet(target)
    threshold = save_threshold(sheet, weapon.armor_penetration)
    if threshold <= 6:
        roll = _roll(s, ev, "save", 1, target.owner, unit=target.unit_id)[0]
        if roll >= threshold:
            return _pop(s)
    victim = target.models[f.locals["alloc"]]
    dealt = min(weapon.damage, victim.wounds_remaining)
    victim.wounds_remaining -= dealt
    _emit(s, ev, "damage_dealt", attacker.owner, attacker=attacker.unit_id,
          target=target.unit_id, model=f.locals["alloc"], amount=dealt)
    if victim.wounds_remaining == 0:
        _emit(s, ev, "model_slain", target.owner, unit=target.unit_id,
              model=f.locals["alloc"])
        if target.destroyed:
            _emit(s, ev, "unit_destroyed", target.owner, unit=target.unit_id)
            s.sequence_stack.pop()
            _check_wipeout(s, ev)
            return True
        _fix_coherency(s, target)
    return _pop(s)


def _step_charge(s: GameState, f: SequenceFrame, ev: list[EventRecord]) -> bool:
    p = f.locals["player"]
    if f.step == 0:
        _phase_begin(s, ev, p, "charge")
        _clear_flags(s, p, ("declared_charge", "charged_this_turn"))
        f.step = 1
        return True
    if f.step in (1, 2):
        return False  # select_charge_unit / charge_target
    return _pop(s)


def _step_charge_resolution(s: GameState, f: SequenceFrame, ev: list[EventRecord]) -> bool:
    u = s.unit(f.locals["unit"])
    p = u.owner
    if f.step == 0:
        r1, r2 = _roll(s, ev, "charge", 2, p, unit=u.unit_id)
        f.locals["r1"], f.locals["r2"] = r1, r2
        f.step = 1
        return True
    if f.step == 1:
        if _reroll_eligible(s, p, u.unit_id):
            return False  # reroll_offer decision
        f.step = 2
        return True
    # step 2: resolve the charge move
    target = s.unit(f.locals["target"])
    rolled = f.locals["r1"] + f.locals["r2"]
    anchor = u.anchor().position
    needed = _nearest_model_distance(anchor, target) - 1
    success = 0
    if rolled >= needed:
        landing = _find_charge_landing(s, u, target, rolled)
        if landing is not None:
            allowed = _free_map(s, u.unit_id)
            _reposition(s, u, landing, allowed)
            u.flags.add("charged_this_turn")
            success = 1
    _emit(s, ev, "charge_result", p, unit=u.unit_id, target=target.unit_id,
          r1=f.locals["r1"], r2=f.locals["r2"], needed=needed, success=success)
    return _pop(s)


def _find_charge_landing(s: GameState, u: UnitState, target: UnitState,
                         budget: int) -> int | None:
    """Deterministic landing square: free, within the roll, adjacent to the
    target, and with room to pack the whole unit."""
    allowed = _free_map(s, u.unit_id)
    labels, sizes = component_sizes(allowed)
    k = u.alive_count()
    anchor = u.anchor().position
    best: tuple[int, int] | None = None
    for m in target.models:
        if m.wounds_remaining == 0:
            continue
        x0, y0 = m.position
        for y in range(max(0, y0 - 1), min(BOARD_H, y0 + 2)):
            for x in range(max(0, x0 - 1), min(BOARD_W, x0 + 2)):
                idx = y * BOARD_W + x
                if not allowed[idx] or sizes[labels[idx]] < k:
                    continue
                d = chebyshev_distance(anchor, GridPos(x, y))
                if d > budget:
                    continue
                key = (d, idx)
                if best is None or key < best:
                    best = key
    return best[1] if best else None


def _step_fight(s: GameState, f: SequenceFrame, ev: list[EventRecord]) -> bool:
    p = f.locals["player"]
    if f.step == 0:
        _phase_begin(s, ev, p, "fight")
        for u in s.units:
            u.flags.discard("fought")
        f.step = 1
        return True
    if f.step == 1:  # charged units strike first, active player's order
        if _fight_eligible(s, p, charged_only=True):
            return False  # select_fight_unit
        f.locals["side"] = 1 - p
        f.step = 4
        return True
    if f.step == 2:
        return False  # fight_target
    if f.step == 3:
        if _dispatch_attack(s, f, ranged=False):
            return True
        f.step = f.locals["ret"]
        return True
    if f.step == 4:  # remaining units alternate, non-active player first
        side = f.locals["side"]
        if not _fight_eligible(s, side, charged_only=False):
            if not _fight_eligible(s, 1 - side, charged_only=False):
                return _pop(s)
            f.locals["side"] = 1 - side
            return True
        return False  # select_fight_unit
    return _pop(s)


_STEP_FUNCS = {
    "game": _step_game,
    "round": _step_round,
    "turn": _step_turn,
    "command_phase": _step_command,
    "movement_phase": _step_movement,
    "shooting_phase": _step_shooting,
    "charge_phase": _step_charge,
    "fight_phase": _step_fight,
    "scoring": _step_scoring,
    "single_attack": _step_single_attack,
    "battle_shock_test": _step_battle_shock,
    "charge_resolution": _step_charge_resolution,
}


# ---------------------------------------------------------------------------
# Decision derivation
# ---------------------------------------------------------------------------

def _decision_kind(s: GameState) -> tuple[str, int]:
    """(kind, actor) for the decision step the engine is stopped at."""
    f = s.sequence_stack[-1]
    seq, step = f.sequence, f.step
    if seq == "game":
        if step == 1:
            return "choose_turn_order", f.locals["winner"]
        if step == 2:
            return "deploy_unit", f.locals["dep_actor"]
        if step == 3:
            return "deploy_position", f.locals["dep_actor"]
    elif seq == "movement_phase":
        kinds = {1: "select_move_unit", 2: "choose_move_kind", 4: "move_target"}
        return kinds[step], f.locals["player"]
    elif seq == "shooting_phase":
        return ("select_shoot_unit" if step == 1 else "shoot_target"), f.locals["player"]
    elif seq == "charge_phase":
        return ("select_charge_unit" if step == 1 else "charge_target"), f.locals["player"]
    elif seq in ("charge_resolution", "battle_shock_test"):
        return "reroll_offer", s.unit(f.locals["unit"]).owner
    elif seq == "fight_phase":
        if step == 1:
            return "select_fight_unit", f.locals["player"]
        if step == 4:
            return "select_fight_unit", f.locals["side"]
        return "fight_target", s.unit(f.locals["cur_unit"]).owner
    elif seq == "single_attack":
        return "allocate_model", s.unit(f.locals["target"]).owner
    raise AssertionError(f"{seq} frame stopped at non-decision step {step}")


def _compute_options(s: GameState) -> list[Action]:
    f = s.sequence_stack[-1]
    kind, actor = _decision_kind(s)
    opts: list[Action]

    if kind == "choose_turn_order":
        opts = [Action(CHOOSE_FIRST), Action(CHOOSE_SECOND)]

    elif kind == "deploy_unit":
        deployed = f.locals.get("deployed", 0)
        opts = [
            Action(SELECT_UNIT, u.unit_id)
            for u in s.units
            if u.owner == actor and not deployed >> u.unit_id & 1
        ]

    elif kind == "deploy_position":
        u = s.unit(f.locals["dep_unit"])
        free = _free_map(s, u.unit_id)
        allowed = bytearray(N if in_zone(actor, pos_from_idx(i)) else 0
                            for i, N in enumerate(free))
        labels, sizes = component_sizes(allowed)
        k = u.alive_count()
        opts = [
            Action(TARGET_SQUARE, i)
            for i in range(B.N_SQUARES)
            if allowed[i] and sizes[labels[i]] >= k
        ]

    elif kind == "select_move_unit":
        opts = [Action(PASS)] + [
            Action(SELECT_UNIT, u.unit_id)
            for u in s.units
            if u.owner == actor and not u.destroyed and "moved" not in u.flags
        ]

    elif kind == "choose_move_kind":
        u = s.unit(f.locals["cur_unit"])
        opts = [Action(MOVE_KIND, MOVE_KINDS.index("stationary"))]
        if is_engaged(s, u.unit_id):
            allowed = _safe_map(s, u)
            if _destination_squares(s, u, allowed, s.sheet(u).move, include_anchor=False):
                opts.append(Action(MOVE_KIND, MOVE_KINDS.index("fall_back")))
        else:
            opts.append(Action(MOVE_KIND, MOVE_KINDS.index("normal")))
            opts.append(Action(MOVE_KIND, MOVE_KINDS.index("advance")))

    elif kind == "move_target":
        u = s.unit(f.locals["cur_unit"])
        move_kind = MOVE_KINDS[f.locals["move_kind"]]
        allowed = _safe_map(s, u)
        budget = f.locals["budget"]
        include_anchor = move_kind != "fall_back"
        opts = [
            Action(TARGET_SQUARE, i)
            for i in _destination_squares(s, u, allowed, budget, include_anchor)
        ]

    elif kind == "select_shoot_unit":
        units = [
            Action(SELECT_UNIT, u.unit_id)
            for u in s.units
            if u.owner == actor and _can_shoot(s, u)
        ]
        if s.scenario == "single_shooting_maximize" and units:
            opts = units
        else:
            opts = [Action(PASS)] + units

    elif kind == "shoot_target":
        u = s.unit(f.locals["cur_unit"])
        opts = [Action(TARGET_UNIT, t) for t in _shoot_eligible_targets(s, u)]

    elif kind == "select_charge_unit":
        opts = [Action(PASS)] + [
            Action(SELECT_UNIT, u.unit_id)
            for u in s.units
            if u.owner == actor and _can_charge(s, u)
        ]

    elif kind == "charge_target":
        u = s.unit(f.locals["cur_unit"])
        opts = [Action(TARGET_UNIT, t) for t in _charge_targets(s, u)]

    elif kind == "reroll_offer":
        opts = [Action(REROLL_ACCEPT), Action(REROLL_DECLINE)]

    elif kind == "select_fight_unit":
        charged_only = f.step == 1
        opts = [
            Action(SELECT_UNIT, uid)
            for uid in _fight_eligible(s, actor, charged_only=charged_only)
        ]

    elif kind == "fight_target":
        u = s.unit(f.locals["cur_unit"])
        opts = [Action(TARGET_UNIT, t) for t in engaged_units(s, u.unit_id)]

    elif kind == "allocate_model":
        target = s.unit(f.locals["target"])
        sheet = s.sheet(target)
        wounded = [
            i for i, m in enumerate(target.models)
            if 0 < m.wounds_remaining < sheet.wounds_per_model
        ]
        indices = wounded if wounded else target.alive_indices()
        opts = [Action(ALLOCATE_MODEL, i) for i in indices]

    else:
        raise AssertionError(kind)

    opts.sort(key=action_to_id)
    return opts


# ---------------------------------------------------------------------------
# Decision resolution
# ---------------------------------------------------------------------------

def _resolve(s: GameState, a: Action, ev: list[EventRecord]) -> None:
    f = s.sequence_stack[-1]
    kind, actor = _decision_kind(s)

    if kind == "choose_turn_order":
        s.first_player = actor if a.op == CHOOSE_FIRST else 1 - actor
        f.locals["dep_next"] = f.locals["winner"]
        f.step = 2

    elif kind == "deploy_unit":
        f.locals["dep_unit"] = a.arg
        f.step = 3

    elif kind == "deploy_position":
        u = s.unit(f.locals["dep_unit"])
        free = _free_map(s, u.unit_id)
        allowed = bytearray(N if in_zone(actor, pos_from_idx(i)) else 0
                            for i, N in enumerate(free))
        _reposition(s, u, a.arg, allowed)
        f.locals["deployed"] = f.locals.get("deployed", 0) | 1 << u.unit_id
        f.locals["dep_next"] = 1 - actor
        f.step = 2

    elif kind == "select_move_unit":
        if a.op == PASS:
            f.step = 5
        else:
            f.locals["cur_unit"] = a.arg
            f.step = 2

    elif kind == "choose_move_kind":
        u = s.unit(f.locals["cur_unit"])
        move_kind = MOVE_KINDS[a.arg]
        f.locals["move_kind"] = a.arg
        if move_kind == "stationary":
            u.flags.add("moved")
            f.step = 1
        elif move_kind == "advance":
            f.step = 3  # roll first, then choose the destination
        else:
            f.locals["budget"] = s.sheet(u).move
            f.step = 4

    elif kind == "move_target":
        u = s.unit(f.locals["cur_unit"])
        move_kind = MOVE_KINDS[f.locals["move_kind"]]
        allowed = _safe_map(s, u)
        anchor_idx = u.anchor().position.idx
        if a.arg != anchor_idx:
            _reposition(s, u, a.arg, allowed)
        u.flags.add("moved")
        if move_kind == "advance":
            u.flags.add("advanced")
        elif move_kind == "fall_back":
            u.flags.add("fell_back")
        pos = pos_from_idx(a.arg)
        _emit(s, ev, "move_made", u.owner, unit=u.unit_id, x=pos.x, y=pos.y,
              move_kind=f.locals["move_kind"])
        f.step = 1

    elif kind == "select_shoot_unit":
        if a.op == PASS:
            f.step = 4
        else:
            f.locals["cur_unit"] = a.arg
            f.step = 2

    elif kind == "shoot_target":
        u = s.unit(f.locals["cur_unit"])
        u.flags.add("shot")
        f.locals["cur_target"] = a.arg
        f.locals["mi"] = f.locals["wi"] = f.locals["ai"] = 0
        f.step = 3

    elif kind == "select_charge_unit":
        if a.op == PASS:
            f.step = 3
        else:
            f.locals["cur_unit"] = a.arg
            f.step = 2

    elif kind == "charge_target":
        u = s.unit(f.locals["cur_unit"])
        u.flags.add("declared_charge")
        f.step = 1
        s.sequence_stack.append(SequenceFrame(
            "charge_resolution", locals={"unit": u.unit_id, "target": a.arg}
        ))

    elif kind == "reroll_offer":
        u = s.unit(f.locals["unit"])
        if a.op == REROLL_ACCEPT:
            ps = s.players[actor]
            ps.command_points -= 1
            ps.stratagem_used_this_phase = True
            _emit(s, ev, "cp_changed", actor, delta=-1, total=ps.command_points)
            _emit(s, ev, "reroll_used", actor, unit=u.unit_id)
            purpose = "charge" if f.sequence == "charge_resolution" else "battle_shock"
            r1, r2 = _roll(s, ev, purpose, 2, actor, unit=u.unit_id)
            f.locals["r1"], f.locals["r2"] = r1, r2
        f.step = 2

    elif kind == "select_fight_unit":
        f.locals["ret"] = f.step
        if f.step == 4:
            f.locals["side"] = 1 - actor
        f.locals["cur_unit"] = a.arg
        f.step = 2

    elif kind == "fight_target":
        u = s.unit(f.locals["cur_unit"])
        u.flags.add("fought")
        f.locals["cur_target"] = a.arg
        f.locals["mi"] = f.locals["wi"] = f.locals["ai"] = 0
        f.step = 3

    elif kind == "allocate_model":
        f.locals["alloc"] = a.arg
        f.step = 3

    else:
        raise AssertionError(kind)


# ---------------------------------------------------------------------------
# Engine loop and public API
# ---------------------------------------------------------------------------

def _advance(s: GameState, ev: list[EventRecord]) -> None:
    """Run sequences until the next real decision or a terminal state."""
    while True:
        if s.terminal is not None:
            return
        if not s.sequence_stack:
            _finish_by_vp(s, ev)
            return
        f = s.sequence_stack[-1]
        if _STEP_FUNCS[f.sequence](s, f, ev):
            continue
        # stopped at a decision step
        options = _compute_options(s)
        assert options, "decision raised with no legal options"
        if len(options) == 1 and s.auto_resolve:
            _resolve(s, options[0], ev)
            continue
        if s.decision_count >= DECISION_BUDGET:
            _finish(s, ev, DRAW, budget=True)
            return
        kind, actor = _decision_kind(s)
        s.decision_cache = DecisionRequest(kind, actor, options)
        return


def current_decision(s: GameState) -> DecisionRequest | GameResult:
    """The pending decision with its full legal option list, or the result."""
    if s.terminal is not None:
        return s.terminal
    if s.decision_cache is None:
        kind, actor = _decision_kind(s)
        s.decision_cache = DecisionRequest(kind, actor, _compute_options(s))
    return s.decision_cache


def apply_inplace(s: GameState, a: Action) -> list[EventRecord]:
    """Apply one action to ``s`` in place; returns the emitted events."""
    if s.terminal is not None:
        raise IllegalActionError("cannot apply an action to a terminal state")
    dec = current_decision(s)
    if a not in dec.options:
        raise IllegalActionError(f"illegal action {a} for pending {dec.kind} decision")
    s.decision_cache = None
    ev: list[EventRecord] = []
    _resolve(s, a, ev)
    s.decision_count += 1
    _advance(s, ev)
    return ev


def apply(s: GameState, a: Action) -> tuple[GameState, list[EventRecord]]:
    """Pure transition: returns (new state, events); ``s`` is unchanged."""
    out = clone_state(s)
    events = apply_inplace(out, a)
    return out, events


def new_state(rosters: tuple[list[Datasheet], list[Datasheet]], seed: int,
              registry: Registry, scenario: str = "full_game",
              auto_resolve: bool = True,
              events_out: list[EventRecord] | None = None) -> GameState:
    """Fresh game at the first decision (the turn-order choice).

    Setup events (the roll-off dice) are appended to ``events_out`` when given.
    """
    units = _initial_units(rosters, registry)
    s = GameState(
        round=1,
        phase="end",
        active_player=0,
        first_player=0,
        players=[PlayerState(faction=r[0].faction) for r in rosters],
        units=units,
        objectives=[ObjectiveMarker(GridPos(x, y)) for x, y in OBJECTIVE_POSITIONS],
        sequence_stack=[SequenceFrame("game")],
        rng=RngStream(state=seed & 0xFFFFFFFFFFFFFFFF),
        decision_count=0,
        terminal=None,
        event_ordinal=0,
        scenario=scenario,
        auto_resolve=auto_resolve,
        registry=registry,
    )
    _advance(s, events_out if events_out is not None else [])
    return s


def _initial_units(rosters, registry: Registry) -> list[UnitState]:
    units: list[UnitState] = []
    occupied = bytearray(B.N_SQUARES)
    for player, roster in enumerate(rosters):
        if not 1 <= len(roster) <= B.MAX_UNITS_PER_SIDE:
            raise ValueError(f"roster size must be 1..{B.MAX_UNITS_PER_SIDE}: {len(roster)}")
        row = 2 if player == 0 else B.BOARD_H - 3
        for i, sheet in enumerate(roster):
            if sheet.name not in registry.datasheets:
                raise KeyError(f"unknown datasheet: {sheet.name}")
            allowed = bytearray(
                (not occupied[idx]) and in_zone(player, pos_from_idx(idx))
                for idx in range(B.N_SQUARES)
            )
            anchor = row * BOARD_W + 2 + i * 5
            if not allowed[anchor]:
                anchor = next(idx for idx in range(B.N_SQUARES) if allowed[idx])
            squares = flood_collect(allowed, anchor, sheet.models)
            assert len(squares) == sheet.models, "deployment zone cannot fit the roster"
            models = [
                ModelState(pos_from_idx(idx), sheet.wounds_per_model) for idx in squares
            ]
            for idx in squares:
                occupied[idx] = 1
            units.append(UnitState(player * 8 + i, sheet.name, player, models))
    return units
