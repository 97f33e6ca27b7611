"""Action variants and the flat id catalog.

Every player choice in the game is one of a small set of tagged variants.
The variants map bijectively onto a fixed catalog of 1371 integer ids so
that RL agents can treat the game as a single discrete action space:

    id 0        Pass
    id 1        ChooseFirst
    id 2        ChooseSecond
    id 3        RerollAccept
    id 4        RerollDecline
    ids 5-8     MoveKind (stationary, normal, advance, fall_back)
    ids 9-24    SelectUnit(0-15)
    ids 25-40   TargetUnit(0-15)
    ids 41-50   AllocateModel(0-9)
    ids 51-1370 TargetSquare, id = 51 + y*44 + x
"""

from __future__ import annotations

from dataclasses import dataclass

from .board import BOARD_W, BOARD_H, GridPos

TOTAL_ACTION_IDS = 51 + BOARD_W * BOARD_H  # 1371

MOVE_KINDS = ("stationary", "normal", "advance", "fall_back")

# op tags
PASS = "pass"
CHOOSE_FIRST = "choose_first"
CHOOSE_SECOND = "choose_second"
REROLL_ACCEPT = "reroll_accept"
REROLL_DECLINE = "reroll_decline"
MOVE_KIND = "move_kind"
SELECT_UNIT = "select_unit"
TARGET_UNIT = "target_unit"
ALLOCATE_MODEL = "allocate_model"
TARGET_SQUARE = "target_square"


@dataclass(frozen=True, slots=True)
class Action:
    """Tagged action variant; ``arg`` meaning depends on ``op``.

    - move_kind: index into MOVE_KINDS
    - select_unit / target_unit: unit id 0-15
    - allocate_model: model index 0-9
    - target_square: y * 44 + x
    - everything else: arg is 0
    """

    op: str
    arg: int = 0

    @property
    def square(self) -> GridPos:
        assert self.op == TARGET_SQUARE
        return GridPos(self.arg % BOARD_W, self.arg // BOARD_W)

    @staticmethod
    def at(pos: GridPos) -> "Action":
        return Action(TARGET_SQUARE, pos.y * BOARD_W + pos.x)


_BASE = {
    PASS: 0,
    CHOOSE_FIRST: 1,
    CHOOSE_SECOND: 2,
    REROLL_ACCEPT: 3,
    REROLL_DECLINE: 4,
    MOVE_KIND: 5,
    SELECT_UNIT: 9,
    TARGET_UNIT: 25,
    ALLOCATE_MODEL: 41,
    TARGET_SQUARE: 51,
}


def action_to_id(a: Action) -> int:
    return _BASE[a.op] + a.arg


def id_to_action(i: int) -> Action:
    if not 0 <= i < TOTAL_ACTION_IDS:
        raise ValueError(f"action id out of range: {i} (must be 0..{TOTAL_ACTION_IDS - 1})")
    if i >= 51:
        return Action(TARGET_SQUARE, i - 51)
    if i >= 41:
        return Action(ALLOCATE_MODEL, i - 41)
    if i >= 25:
        return Action(TARGET_UNIT, i - 25)
    if i >= 9:
        return Action(SELECT_UNIT, i - 9)
    if i >= 5:
        return Action(MOVE_KIND, i - 5)
    return Action([PASS, CHOOSE_FIRST, CHOOSE_SECOND, REROLL_ACCEPT, REROLL_DECLINE][i])
