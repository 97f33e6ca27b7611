import pytest

from fourhammer.actions import action_to_id
from fourhammer.agents import RandomAgent
from fourhammer.rules import apply_inplace, current_decision
from fourhammer.scenarios import make_scenario
from fourhammer.stats import load_registry


@pytest.fixture(scope="session")
def registry():
    return load_registry()


def play_random(seed, scenario="full_game", collect_states=None,
                state_stride=10):
    """Drive one random-vs-random game to terminal.

    Returns (final_state, action_ids, events). If ``collect_states`` is a
    list, every ``state_stride``-th mid-game state is appended (cloned).
    """
    from fourhammer.board import clone_state

    events = []
    s = make_scenario(scenario, seed, events_out=events)
    agents = (RandomAgent(seed ^ 0x1234), RandomAgent(seed ^ 0x8765))
    ids = []
    while s.terminal is None:
        if collect_states is not None and s.decision_count % state_stride == 0:
            collect_states.append(clone_state(s))
        dec = current_decision(s)
        a = agents[dec.actor](s)
        ids.append(action_to_id(a))
        events.extend(apply_inplace(s, a))
    return s, ids, events


def replay_ids(seed, ids, scenario="full_game"):
    """Re-apply a recorded id list from the same seed; returns (state, events)."""
    from fourhammer.actions import id_to_action

    events = []
    s = make_scenario(scenario, seed, events_out=events)
    for aid in ids:
        events.extend(apply_inplace(s, id_to_action(aid)))
    return s, events
