"""Deterministic digital-twin engine for a grid-based two-player dice wargame."""

from .actions import Action, TOTAL_ACTION_IDS, action_to_id, id_to_action
from .board import (
    BOARD_H, BOARD_W, DRAW, GameResult, GameState, GridPos, chebyshev_distance,
    validate_state,
)
from .encodings import (
    DecodeError, decode_binary, decode_json, encode_binary, encode_json,
    encode_tensor, encode_text, legal_mask,
)
from .rng import RngStream
from .rules import (
    DecisionRequest, EventRecord, IllegalActionError, apply, apply_inplace,
    current_decision, new_state,
)
from .scenarios import SCENARIO_NAMES, make_scenario, reward
from .stats import Datasheet, Registry, StatsError, WeaponProfile, load_registry

__version__ = "0.1.0"

__all__ = [
    "Action", "TOTAL_ACTION_IDS", "action_to_id", "id_to_action",
    "BOARD_H", "BOARD_W", "DRAW", "GameResult", "GameState", "GridPos",
    "chebyshev_distance", "validate_state",
    "DecodeError", "decode_binary", "decode_json", "encode_binary",
    "encode_json", "encode_tensor", "encode_text", "legal_mask",
    "RngStream",
    "DecisionRequest", "EventRecord", "IllegalActionError", "apply",
    "apply_inplace", "current_decision", "new_state",
    "SCENARIO_NAMES", "make_scenario", "reward",
    "Datasheet", "Registry", "StatsError", "WeaponProfile", "load_registry",
    "__version__",
]
