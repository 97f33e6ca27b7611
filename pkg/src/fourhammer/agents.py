"""Baseline decision policies: random, greedy, and scripted.

Agents are callables from a state to one of its legal actions. They never
mutate the state and draw any randomness from their own stream, not the
game's, so agent choices never perturb the engine's dice.
"""

from __future__ import annotations

from .actions import Action, MOVE_KINDS, action_to_id
from .board import GameState, chebyshev_distance
from .rng import RngStream
from .rules import DecisionRequest, current_decision


class RandomAgent:
    """Picks uniformly among the legal options of each decision."""

    def __init__(self, seed: int):
        self.rng = RngStream(state=seed & 0xFFFFFFFFFFFFFFFF)

    def __call__(self, s: GameState) -> Action:
        dec = current_decision(s)
        assert isinstance(dec, DecisionRequest)
        return dec.options[self.rng.next_below(len(dec.options))]


class ScriptedAgent:
    """Replays a fixed list of action ids; raises when the script runs dry."""

    def __init__(self, action_ids: list[int]):
        self.remaining = list(action_ids)

    def __call__(self, s: GameState) -> Action:
        if not self.remaining:
            raise IndexError("scripted agent exhausted")
        from .actions import id_to_action
        return id_to_action(self.remaining.pop(0))


# P(2d6 >= needed) >= 1/2 exactly when needed <= 7 (21 of 36 outcomes).
_CHARGE_SURE_NEED = 7


class GreedyAgent:
    """Deterministic heuristic; ties always break toward the lowest action id.

    - shooting and fight targets: the enemy unit with the fewest total
      remaining wounds (easiest kill)
    - movement: the legal destination minimizing Chebyshev distance to the
      nearest uncontrolled objective
    - charges: declared only when the 2d6 table gives at least even odds
    - rerolls: accept when the kept roll failed and CP is available
    - anything else: the lowest-id option
    """

    def __call__(self, s: GameState) -> Action:
        dec = current_decision(s)
        assert isinstance(dec, DecisionRequest)
        opts = sorted(dec.options, key=action_to_id)
        kind = dec.kind

        if kind == "choose_move_kind":
            for a in opts:
                if MOVE_KINDS[a.arg] == "normal":
                    return a
            return opts[0]

        if kind == "move_target":
            unit = s.unit(s.sequence_stack[-1].locals["cur_unit"])
            goal = self._goal_square(s, dec.actor, unit)
            return min(
                opts,
                key=lambda a: (chebyshev_distance(a.square, goal), action_to_id(a)),
            )

        if kind in ("select_move_unit", "select_shoot_unit"):
            for a in opts:
                if a.op != "pass":
                    return a
            return opts[0]

        if kind == "select_charge_unit":
            for a in opts:
                if a.op == "pass":
                    continue
                if self._charge_worthwhile(s, a.arg):
                    return a
            return opts[0]

        if kind in ("shoot_target", "charge_target", "fight_target"):
            return min(
                opts,
                key=lambda a: (self._unit_wounds(s, a.arg), action_to_id(a)),
            )

        if kind == "reroll_offer":
            f = s.sequence_stack[-1]
            total = f.locals["r1"] + f.locals["r2"]
            needed = f.locals.get("needed", 13)
            if total < needed and len(opts) > 1:
                for a in opts:
                    if a.op == "reroll_accept":
                        return a
            for a in opts:
                if a.op == "reroll_decline":
                    return a
            return opts[0]

        return opts[0]

    @staticmethod
    def _unit_wounds(s: GameState, unit_id: int) -> int:
        return sum(m.wounds_remaining for m in s.unit(unit_id).models)

    @staticmethod
    def _charge_worthwhile(s: GameState, unit_id: int) -> bool:
        from .rules import _unit_gap
        u = s.unit(unit_id)
        for enemy in s.units:
            if enemy.owner == u.owner or enemy.destroyed:
                continue
            if _unit_gap(u, enemy) - 1 <= _CHARGE_SURE_NEED:
                return True
        return False

    @staticmethod
    def _goal_square(s: GameState, player: int, unit):
        from .board import objective_control
        side = f"p{player}"
        anchor = unit.anchor().position
        best = None
        for i, marker in enumerate(s.objectives):
            if objective_control(s, i) == side:
                continue
            d = chebyshev_distance(anchor, marker.position)
            if best is None or d < best[0]:
                best = (d, marker.position)
        return best[1] if best else s.objectives[0].position
