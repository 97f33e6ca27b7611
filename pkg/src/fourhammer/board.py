"""Game state structures: grid, units, players, objectives, and validation.

The board is a 44x30 grid of 1-inch squares, x in [0, 43], y in [0, 29].
Player 0's table edge is y = 0 and their deployment zone is y <= 5; player 1
deploys at y >= 24. Distances are Chebyshev (diagonals count 1), so the
engagement range of 1 inch becomes Chebyshev distance 1.

Squares are also addressed by flat index ``y * 44 + x`` in the packing and
occupancy helpers, which operate on bytearrays for speed.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .rng import RngStream
from .stats import Datasheet, Registry

BOARD_W = 44
BOARD_H = 30
N_SQUARES = BOARD_W * BOARD_H

DEPLOY_ZONE_DEPTH = 6  # player 0: y <= 5, player 1: y >= 24
ENGAGEMENT_RANGE = 1
OBJECTIVE_RADIUS = 3
OBJECTIVE_POSITIONS = ((11, 15), (33, 15), (22, 7), (22, 22))

MAX_UNITS_PER_SIDE = 8
MAX_COMMAND_POINTS = 10
MAX_VICTORY_POINTS = 60
MAX_ROUNDS = 5
MAX_STACK_DEPTH = 16
DECISION_BUDGET = 20_000

PHASES = ("command", "movement", "shooting", "charge", "fight", "end")

UNIT_FLAGS = (
    "moved",
    "advanced",
    "fell_back",
    "shot",
    "declared_charge",
    "charged_this_turn",
    "fought",
    "battle_shocked",
)

DRAW = 2  # GameResult.winner value for a drawn game


class GridPos(NamedTuple):
    x: int
    y: int

    @property
    def idx(self) -> int:
        return self.y * BOARD_W + self.x


def pos_from_idx(idx: int) -> GridPos:
    return GridPos(idx % BOARD_W, idx // BOARD_W)


def chebyshev_distance(a: GridPos, b: GridPos) -> int:
    return max(abs(a.x - b.x), abs(a.y - b.y))


@dataclass(slots=True)
class ModelState:
    position: GridPos
    wounds_remaining: int  # 0 = destroyed

    @property
    def alive(self) -> bool:
        return self.wounds_remaining > 0


@dataclass(slots=True)
class UnitState:
    unit_id: int  # 0-7 player 0, 8-15 player 1
    datasheet_name: str
    owner: int
    models: list[ModelState]
    flags: set[str] = field(default_factory=set)

    def alive_models(self) -> list[ModelState]:
        return [m for m in self.models if m.wounds_remaining > 0]

    def alive_indices(self) -> list[int]:
        return [i for i, m in enumerate(self.models) if m.wounds_remaining > 0]

    def alive_count(self) -> int:
        return sum(1 for m in self.models if m.wounds_remaining > 0)

    @property
    def destroyed(self) -> bool:
        return all(m.wounds_remaining == 0 for m in self.models)

    def anchor(self) -> ModelState:
        """Lowest-index alive model; spatial decisions are anchored here."""
        for m in self.models:
            if m.wounds_remaining > 0:
                return m
        raise ValueError(f"unit {self.unit_id} has no alive models")


@dataclass(slots=True)
class PlayerState:
    faction: str
    command_points: int = 0
    victory_points: int = 0
    stratagem_used_this_phase: bool = False


class ObjectiveMarker(NamedTuple):
    position: GridPos
    control_radius: int = OBJECTIVE_RADIUS


@dataclass(slots=True)
class GameResult:
    winner: int  # 0, 1, or DRAW
    vp: tuple[int, int]
    budget_exhausted: bool = False


@dataclass(slots=True)
class SequenceFrame:
    sequence: str
    step: int = 0
    locals: dict[str, int] = field(default_factory=dict)


@dataclass(slots=True)
class GameState:
    """Complete resumable game state, including the sequence stack and RNG."""

    round: int
    phase: str
    active_player: int
    first_player: int
    players: list[PlayerState]
    units: list[UnitState]
    objectives: list[ObjectiveMarker]
    sequence_stack: list[SequenceFrame]
    rng: RngStream
    decision_count: int
    terminal: Optional[GameResult]
    event_ordinal: int
    scenario: str
    auto_resolve: bool
    registry: Registry
    # memoized pending DecisionRequest; derived, never serialized or compared
    decision_cache: object = field(default=None, compare=False, repr=False)

    def sheet(self, unit: UnitState) -> Datasheet:
        return self.registry.datasheets[unit.datasheet_name]

    def unit(self, unit_id: int) -> UnitState:
        for u in self.units:
            if u.unit_id == unit_id:
                return u
        raise KeyError(f"no unit with id {unit_id}")

    def player_units(self, player: int) -> list[UnitState]:
        return [u for u in self.units if u.owner == player]

    def alive_units(self, player: int) -> list[UnitState]:
        return [u for u in self.units if u.owner == player and not u.destroyed]


def clone_state(s: GameState) -> GameState:
    """Fast structural copy; the registry is immutable and shared."""
    return GameState(
        round=s.round,
        phase=s.phase,
        active_player=s.active_player,
        first_player=s.first_player,
        players=[
            PlayerState(p.faction, p.command_points, p.victory_points, p.stratagem_used_this_phase)
            for p in s.players
        ],
        units=[
            UnitState(
                u.unit_id,
                u.datasheet_name,
                u.owner,
                [ModelState(m.position, m.wounds_remaining) for m in u.models],
                set(u.flags),
            )
            for u in s.units
        ],
        objectives=list(s.objectives),
        sequence_stack=[SequenceFrame(f.sequence, f.step, dict(f.locals)) for f in s.sequence_stack],
        rng=s.rng.clone(),
        decision_count=s.decision_count,
        terminal=GameResult(s.terminal.winner, s.terminal.vp, s.terminal.budget_exhausted)
        if s.terminal
        else None,
        event_ordinal=s.event_ordinal,
        scenario=s.scenario,
        auto_resolve=s.auto_resolve,
        registry=s.registry,
        decision_cache=s.decision_cache,
    )


def states_equal(a: GameState, b: GameState) -> bool:
    return (
        a.round == b.round
        and a.phase == b.phase
        and a.active_player == b.active_player
        and a.first_player == b.first_player
        and a.players == b.players
        and a.units == b.units
        and a.objectives == b.objectives
        and a.sequence_stack == b.sequence_stack
        and a.rng == b.rng
        and a.decision_count == b.decision_count
        and a.terminal == b.terminal
        and a.event_ordinal == b.event_ordinal
        and a.scenario == b.scenario
        and a.auto_resolve == b.auto_resolve
        and a.registry == b.registry
    )


# ---------------------------------------------------------------------------
# Geometry / occupancy helpers
# ---------------------------------------------------------------------------

def in_zone(player: int, pos: GridPos) -> bool:
    if player == 0:
        return pos.y < DEPLOY_ZONE_DEPTH
    return pos.y >= BOARD_H - DEPLOY_ZONE_DEPTH


def occupied_map(s: GameState, exclude_unit: int | None = None) -> bytearray:
    """1 where an alive model stands (optionally ignoring one unit's models)."""
    occ = bytearray(N_SQUARES)
    for u in s.units:
        if u.unit_id == exclude_unit:
            continue
        for m in u.models:
            if m.wounds_remaining > 0:
                occ[m.position.idx] = 1
    return occ


def threat_map(s: GameState, enemy_of: int) -> bytearray:
    """1 on squares within engagement range of an alive model owned by the
    opponent of ``enemy_of`` (i.e. squares a unit of ``enemy_of`` may not end
    a normal/advance/fall-back move on)."""
    threat = bytearray(N_SQUARES)
    for u in s.units:
        if u.owner == enemy_of:
            continue
        for m in u.models:
            if m.wounds_remaining == 0:
                continue
            x0, y0 = m.position
            for yy in range(max(0, y0 - 1), min(BOARD_H, y0 + 2)):
                base = yy * BOARD_W
                for xx in range(max(0, x0 - 1), min(BOARD_W, x0 + 2)):
                    threat[base + xx] = 1
    return threat


_NEIGHBOR_OFFSETS = (
    -BOARD_W - 1, -BOARD_W, -BOARD_W + 1,
    -1, 1,
    BOARD_W - 1, BOARD_W, BOARD_W + 1,
)


def _neighbors(idx: int):
    x = idx % BOARD_W
    for off in _NEIGHBOR_OFFSETS:
        n = idx + off
        if 0 <= n < N_SQUARES and abs(n % BOARD_W - x) <= 1:
            yield n


# precomputed adjacency table: NEIGHBOR_TABLE[idx] -> tuple of adjacent indices
NEIGHBOR_TABLE = tuple(tuple(_neighbors(i)) for i in range(N_SQUARES))


def component_sizes(allowed: bytearray) -> tuple[list[int], list[int]]:
    """8-connected component labels over allowed squares.

    Returns (labels, sizes); labels[i] is -1 on disallowed squares.
    """
    labels = [-1] * N_SQUARES
    sizes: list[int] = []
    for start in range(N_SQUARES):
        if not allowed[start] or labels[start] != -1:
            continue
        label = len(sizes)
        count = 0
        queue = deque([start])
        labels[start] = label
        while queue:
            cur = queue.popleft()
            count += 1
            for n in NEIGHBOR_TABLE[cur]:
                if allowed[n] and labels[n] == -1:
                    labels[n] = label
                    queue.append(n)
        sizes.append(count)
    return labels, sizes


def flood_collect(allowed: bytearray, start: int, count: int) -> list[int]:
    """First ``count`` squares of a deterministic BFS from ``start``.

    Consecutive BFS squares are 8-adjacent to an earlier one, so any prefix
    satisfies unit coherency (every square within Chebyshev 2 of another).
    """
    if not allowed[start]:
        return []
    seen = {start}
    out = [start]
    queue = deque([start])
    while queue and len(out) < count:
        cur = queue.popleft()
        for n in NEIGHBOR_TABLE[cur]:
            if allowed[n] and n not in seen:
                seen.add(n)
                out.append(n)
                queue.append(n)
                if len(out) == count:
                    break
    return out


def chain_pack(allowed: bytearray, anchor: int, count: int) -> list[int]:
    """Greedy coherent packing around ``anchor`` for the death fix-up path.

    Unlike flood_collect this does not require 8-connectivity, only the
    Chebyshev-2 coherency chain, so it succeeds on nearly-any board.
    """
    ax, ay = anchor % BOARD_W, anchor // BOARD_W
    candidates = sorted(
        (i for i in range(N_SQUARES) if allowed[i] and i != anchor),
        key=lambda i: (max(abs(i % BOARD_W - ax), abs(i // BOARD_W - ay)), i),
    )
    placed = [anchor]
    for cand in candidates:
        if len(placed) >= count:
            break
        cx, cy = cand % BOARD_W, cand // BOARD_W
        if any(
            max(abs(cx - p % BOARD_W), abs(cy - p // BOARD_W)) <= 2 for p in placed
        ):
            placed.append(cand)
    return placed


def unit_coherent(u: UnitState) -> bool:
    alive = [m.position for m in u.models if m.wounds_remaining > 0]
    if len(alive) <= 1:
        return True
    return all(
        any(chebyshev_distance(a, b) <= 2 for b in alive if b is not a) for a in alive
    )


# ---------------------------------------------------------------------------
# Derived queries
# ---------------------------------------------------------------------------

def engaged_units(s: GameState, unit_id: int) -> list[int]:
    """Enemy units with an alive model within engagement range of this unit."""
    u = s.unit(unit_id)
    zone = set()
    for m in u.models:
        if m.wounds_remaining > 0:
            zone.add(m.position.idx)
            zone.update(NEIGHBOR_TABLE[m.position.idx])
    out = []
    for e in s.units:
        if e.owner == u.owner or e.destroyed:
            continue
        for m in e.models:
            if m.wounds_remaining > 0 and m.position.idx in zone:
                out.append(e.unit_id)
                break
    return out


def is_engaged(s: GameState, unit_id: int) -> bool:
    return bool(engaged_units(s, unit_id))


def objective_control(s: GameState, marker_index: int) -> str:
    """'none' | 'p0' | 'p1' | 'contested' by summed OC within the radius."""
    marker = s.objectives[marker_index]
    totals = [0, 0]
    for u in s.units:
        if "battle_shocked" in u.flags:
            continue
        oc = s.sheet(u).objective_control
        if oc == 0:
            continue
        for m in u.models:
            if m.wounds_remaining > 0 and (
                chebyshev_distance(m.position, marker.position) <= marker.control_radius
            ):
                totals[u.owner] += oc
    if totals[0] == totals[1]:
        return "contested" if totals[0] > 0 else "none"
    return "p0" if totals[0] > totals[1] else "p1"


def controlled_objectives(s: GameState, player: int) -> int:
    tag = "p0" if player == 0 else "p1"
    return sum(1 for i in range(len(s.objectives)) if objective_control(s, i) == tag)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate_state(s: GameState) -> list[str]:
    """Bounds and structural invariants; empty list means the state is sound."""
    v: list[str] = []
    if not 1 <= s.round <= MAX_ROUNDS:
        v.append(f"round must be 1..{MAX_ROUNDS}: {s.round}")
    if s.phase not in PHASES:
        v.append(f"unknown phase: {s.phase}")
    if s.active_player not in (0, 1):
        v.append(f"active_player must be 0|1: {s.active_player}")
    if s.first_player not in (0, 1):
        v.append(f"first_player must be 0|1: {s.first_player}")
    if len(s.players) != 2:
        v.append("exactly two players required")
    for i, p in enumerate(s.players):
        if not 0 <= p.command_points <= MAX_COMMAND_POINTS:
            v.append(f"player {i}: command_points must be 0..{MAX_COMMAND_POINTS}: {p.command_points}")
        if not 0 <= p.victory_points <= MAX_VICTORY_POINTS:
            v.append(f"player {i}: victory_points must be 0..{MAX_VICTORY_POINTS}: {p.victory_points}")
    if s.decision_count < 0:
        v.append("decision_count must be >= 0")
    if len(s.sequence_stack) > MAX_STACK_DEPTH:
        v.append(f"sequence stack depth exceeds {MAX_STACK_DEPTH}")
    if len(s.objectives) != 4:
        v.append("exactly four objective markers required")

    seen_ids = set()
    occupied: dict[int, int] = {}
    for u in s.units:
        name = f"unit {u.unit_id}"
        if u.unit_id in seen_ids:
            v.append(f"{name}: duplicate unit id")
        seen_ids.add(u.unit_id)
        if not 0 <= u.unit_id <= 15:
            v.append(f"{name}: unit id must be 0..15")
            continue
        expected_owner = 0 if u.unit_id < MAX_UNITS_PER_SIDE else 1
        if u.owner != expected_owner:
            v.append(f"{name}: owner {u.owner} does not match id range")
        if u.datasheet_name not in s.registry.datasheets:
            v.append(f"{name}: unknown datasheet '{u.datasheet_name}'")
            continue
        sheet = s.sheet(u)
        if len(u.models) != sheet.models:
            v.append(f"{name}: model count {len(u.models)} != datasheet {sheet.models}")
        if not u.flags <= set(UNIT_FLAGS):
            v.append(f"{name}: unknown flags {u.flags - set(UNIT_FLAGS)}")
        for i, m in enumerate(u.models):
            if not (0 <= m.position.x < BOARD_W and 0 <= m.position.y < BOARD_H):
                v.append(f"{name} model {i}: position off board: {m.position}")
                continue
            if not 0 <= m.wounds_remaining <= sheet.wounds_per_model:
                v.append(
                    f"{name} model {i}: wounds_remaining must be 0..{sheet.wounds_per_model}:"
                    f" {m.wounds_remaining}"
                )
            if m.wounds_remaining > 0:
                idx = m.position.idx
                if idx in occupied:
                    v.append(f"{name} model {i}: square {m.position} shared with unit {occupied[idx]}")
                occupied[idx] = u.unit_id
        if not unit_coherent(u):
            v.append(f"{name}: alive models out of coherency")

    if s.terminal is not None and s.terminal.winner not in (0, 1, DRAW):
        v.append(f"terminal winner must be 0|1|{DRAW}: {s.terminal.winner}")
    return v
