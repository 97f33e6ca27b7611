"""Randomized self-play with per-decision invariant checking.

``run_fuzz`` plays seeded random-vs-random games and validates the full
state invariant set after every applied action. On a violation it shrinks
the reproducing action trace by greedy segment deletion before reporting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .actions import Action, action_to_id, id_to_action
from .agents import RandomAgent
from .board import GameResult, GameState, clone_state, validate_state
from .rules import DecisionRequest, IllegalActionError, apply_inplace, current_decision
from .scenarios import make_scenario


@dataclass
class FuzzViolation(Exception):
    seed: int
    scenario: str
    action_ids: list[int]
    messages: list[str]

    def __str__(self) -> str:
        ids = ",".join(str(i) for i in self.action_ids)
        return (
            f"seed={self.seed} scenario={self.scenario} "
            f"actions=[{ids}]: " + "; ".join(self.messages)
        )


@dataclass
class GameStats:
    seed: int
    decisions: int
    rounds: int
    winner: int
    vp: tuple[int, int]
    budget_exhausted: bool


@dataclass
class FuzzReport:
    games: list[GameStats] = field(default_factory=list)

    @property
    def decision_counts(self) -> list[int]:
        return [g.decisions for g in self.games]


def _check(s: GameState, seed: int, trace: list[int]) -> None:
    messages = validate_state(s)
    if s.terminal is None:
        dec = current_decision(s)
        if isinstance(dec, DecisionRequest) and not dec.options:
            messages.append(f"empty option list for decision {dec.kind}")
    if messages:
        raise FuzzViolation(seed, s.scenario, list(trace), messages)


def play_one(seed: int, scenario: str = "full_game",
             check: bool = True) -> tuple[GameStats, list[int]]:
    """Play one random-vs-random game to the end; returns stats and trace."""
    s = make_scenario(scenario, seed)
    agents = (RandomAgent(seed ^ 0xA5A5A5A5), RandomAgent(seed ^ 0x5A5A5A5A))
    trace: list[int] = []
    if check:
        _check(s, seed, trace)
    while s.terminal is None:
        dec = current_decision(s)
        a = agents[dec.actor](s)
        trace.append(action_to_id(a))
        apply_inplace(s, a)
        if check:
            _check(s, seed, trace)
    stats = GameStats(
        seed=seed, decisions=s.decision_count, rounds=s.round,
        winner=s.terminal.winner, vp=s.terminal.vp,
        budget_exhausted=s.terminal.budget_exhausted,
    )
    return stats, trace


def replay(seed: int, scenario: str, action_ids: list[int]) -> tuple[GameState, list[str]]:
    """Re-run a trace from its seed; returns the final state and violations."""
    s = make_scenario(scenario, seed)
    msgs = validate_state(s)
    for aid in action_ids:
        if msgs or s.terminal is not None:
            break
        try:
            apply_inplace(s, id_to_action(aid))
        except IllegalActionError:
            return s, []  # diverged: the prefix no longer reproduces
        msgs = validate_state(s)
        if not msgs and s.terminal is None:
            dec = current_decision(s)
            if isinstance(dec, DecisionRequest) and not dec.options:
                msgs = [f"empty option list for decision {dec.kind}"]
    return s, msgs


def minimize(v: FuzzViolation) -> FuzzViolation:
    """Greedy segment deletion: drop chunks of the trace while it still fails."""
    ids = list(v.action_ids)
    chunk = max(1, len(ids) // 2)
    while chunk >= 1:
        i = 0
        while i < len(ids):
            candidate = ids[:i] + ids[i + chunk:]
            _, msgs = replay(v.seed, v.scenario, candidate)
            if msgs:
                ids = candidate
            else:
                i += chunk
        chunk //= 2
    _, msgs = replay(v.seed, v.scenario, ids)
    return FuzzViolation(v.seed, v.scenario, ids, msgs or v.messages)


def run_fuzz(n_games: int, base_seed: int = 0, scenario: str = "full_game",
             check: bool = True, shrink: bool = True) -> FuzzReport:
    report = FuzzReport()
    for i in range(n_games):
        try:
            stats, _ = play_one(base_seed + i, scenario, check=check)
        except FuzzViolation as v:
            raise minimize(v) if shrink else v
        report.games.append(stats)
    return report
