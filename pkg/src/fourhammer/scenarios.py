"""The three runnable scenarios and their reward functions.

- ``full_game``: roll-off, deployment, five rounds; win/loss/draw reward.
- ``single_turn``: fixed rosters pre-deployed, exactly one turn per player;
  reward is the normalized difference in surviving models.
- ``single_shooting_maximize``: two fixed attacker units, one fixed target
  already in range; the only free decision is which unit shoots, and the
  reward is the fraction of the target's wounds removed.

Fixture placements are fixed constants so reward curves are comparable
across runs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .board import (
    GameState, GridPos, GridPos as _P, ModelState, ObjectiveMarker,
    OBJECTIVE_POSITIONS, PlayerState, SequenceFrame, UnitState,
)
from .rng import RngStream
from .rules import EventRecord, _advance, _initial_units, new_state
from .stats import Registry, builtin_roster, load_registry

SCENARIO_NAMES = ("full_game", "single_turn", "single_shooting_maximize")

# single_shooting_maximize fixture: attacker anchors, target anchor
_SHOOT_ATTACKERS = ("Strike Squad", "Heavy Gunners")
_SHOOT_ATTACKER_ANCHORS = (GridPos(10, 5), GridPos(16, 5))
_SHOOT_TARGET = "Brood Tyrant"
_SHOOT_TARGET_ANCHOR = GridPos(13, 15)


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    turn_limit: int | None
    reward_rule: str  # win_loss | piece_difference | damage_dealt


SCENARIOS = {
    "full_game": ScenarioSpec("full_game", None, "win_loss"),
    "single_turn": ScenarioSpec("single_turn", 1, "piece_difference"),
    "single_shooting_maximize": ScenarioSpec("single_shooting_maximize", None, "damage_dealt"),
}


def make_scenario(name: str, seed: int, registry: Registry | None = None,
                  auto_resolve: bool = True,
                  events_out: list[EventRecord] | None = None) -> GameState:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario: {name} (expected one of {SCENARIO_NAMES})")
    reg = registry if registry is not None else load_registry()
    rosters = (builtin_roster("AST", reg), builtin_roster("HIV", reg))

    if name == "full_game":
        return new_state(rosters, seed, reg, scenario=name,
                         auto_resolve=auto_resolve, events_out=events_out)

    if name == "single_turn":
        s = _bare_state(rosters, seed, reg, name, auto_resolve)
        s.units = _initial_units(rosters, reg)  # pre-deployed at fixed spots
        s.sequence_stack = [SequenceFrame("game", step=5)]
        _advance(s, events_out if events_out is not None else [])
        return s

    # single_shooting_maximize
    atk = [reg[n] for n in _SHOOT_ATTACKERS]
    tgt = [reg[_SHOOT_TARGET]]
    s = _bare_state((atk, tgt), seed, reg, name, auto_resolve)
    units = []
    for i, (sheet, anchor) in enumerate(zip(atk, _SHOOT_ATTACKER_ANCHORS)):
        units.append(_placed_unit(i, 0, sheet.name, anchor, sheet, reg))
    units.append(_placed_unit(8, 1, _SHOOT_TARGET, _SHOOT_TARGET_ANCHOR, tgt[0], reg))
    s.units = units
    s.sequence_stack = [SequenceFrame("shooting_phase", locals={"player": 0})]
    _advance(s, events_out if events_out is not None else [])
    return s


def _bare_state(rosters, seed: int, reg: Registry, scenario: str,
                auto_resolve: bool) -> GameState:
    return GameState(
        round=1,
        phase="end",
        active_player=0,
        first_player=0,
        players=[PlayerState(faction=r[0].faction) for r in rosters],
        units=[],
        objectives=[ObjectiveMarker(_P(x, y)) for x, y in OBJECTIVE_POSITIONS],
        sequence_stack=[],
        rng=RngStream(state=seed & 0xFFFFFFFFFFFFFFFF),
        decision_count=0,
        terminal=None,
        event_ordinal=0,
        scenario=scenario,
        auto_resolve=auto_resolve,
        registry=reg,
    )


def _placed_unit(unit_id: int, owner: int, name: str, anchor: GridPos,
                 sheet, reg: Registry) -> UnitState:
    """Pack a unit's models in reading order around a fixed anchor."""
    positions = [anchor]
    ring = 1
    while len(positions) < sheet.models:
        for dy in range(-ring, ring + 1):
            for dx in range(-ring, ring + 1):
                if max(abs(dx), abs(dy)) != ring:
                    continue
                p = GridPos(anchor.x + dx, anchor.y + dy)
                if 0 <= p.x < 44 and 0 <= p.y < 30 and p not in positions:
                    positions.append(p)
                if len(positions) == sheet.models:
                    break
            if len(positions) == sheet.models:
                break
        ring += 1
    models = [ModelState(p, sheet.wounds_per_model) for p in positions]
    return UnitState(unit_id, name, owner, models)


def starting_models(s: GameState) -> int:
    return sum(s.sheet(u).models for u in s.units)


def reward(s: GameState, player: int) -> float:
    """Terminal reward for ``player`` under the state's scenario rule."""
    if s.terminal is None:
        raise ValueError("reward is only defined on terminal states")
    rule = SCENARIOS[s.scenario].reward_rule

    if rule == "win_loss":
        if s.terminal.winner == player:
            return 1.0
        if s.terminal.winner == 1 - player:
            return -1.0
        return 0.0

    if rule == "piece_difference":
        own = sum(u.alive_count() for u in s.units if u.owner == player)
        enemy = sum(u.alive_count() for u in s.units if u.owner != player)
        return (own - enemy) / starting_models(s)

    # damage_dealt: single-agent reward for player 0 only
    if player != 0:
        return 0.0
    target = s.unit(8)
    sheet = s.sheet(target)
    total = sheet.models * sheet.wounds_per_model
    remaining = sum(m.wounds_remaining for m in target.models)
    return (total - remaining) / total
