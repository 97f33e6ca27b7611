"""LLM agent loop: textual state in, numbered option out.

Each decision sends the server's text rendering plus the numbered legal
options to a completion endpoint and parses the first integer in the reply
that is a legal action id. Unparseable replies fall back to Pass when legal,
else the lowest legal id, and the fallback is flagged in the transcript.

The endpoint is an HTTP service taking ``{"prompt": ...}`` and returning
``{"text": ...}``; set it via ``FOURHAMMER_LLM_ENDPOINT`` or the ``endpoint``
argument. ``endpoint="stub"`` (the default when the variable is unset) uses
an offline stand-in that picks the first listed option, so the loop runs
with no network dependency.
"""

from __future__ import annotations

import os
import re
import time

ENDPOINT_ENV_VAR = "FOURHAMMER_LLM_ENDPOINT"
STUB_ENDPOINT = "stub"

PROMPT_HEADER = (
    "You are playing a turn-based wargame. Below is the full game state and "
    "the numbered legal moves. Reply with the number of the move you choose.\n\n"
)


class EndpointError(RuntimeError):
    pass


def resolve_endpoint(endpoint: str | None) -> str:
    if endpoint:
        return endpoint
    return os.environ.get(ENDPOINT_ENV_VAR, STUB_ENDPOINT)


def complete(endpoint: str, prompt: str) -> str:
    """One completion call; the stub answers offline."""
    if endpoint == STUB_ENDPOINT:
        match = re.search(r"^\s*(\d+): ", prompt, flags=re.M)
        return f"I'll take option {match.group(1)}." if match else "hmm"
    import requests

    try:
        rep = requests.post(endpoint, json={"prompt": prompt}, timeout=60)
        rep.raise_for_status()
        return rep.json()["text"]
    except Exception as e:  # connection loss, bad payload, HTTP error
        raise EndpointError(f"endpoint {endpoint} failed: {e}") from None


def choose_action(reply: str, legal_ids: list[int]) -> tuple[int, bool]:
    """Parse the first legal id in the reply; returns (id, was_fallback)."""
    for token in re.findall(r"\d+", reply):
        value = int(token)
        if value in legal_ids:
            return value, False
    fallback = 0 if 0 in legal_ids else min(legal_ids)
    return fallback, True


def run_llm_game(env, scenario: str, seed: int, endpoint: str | None = None,
                 runs_root: str = "runs", max_steps: int = 5000) -> str:
    """Play one full game; archives per-decision transcripts.

    Returns the transcript directory (``runs/<timestamp>/``); step files are
    ``step_<n>.txt`` holding the prompt, raw reply, and chosen action.
    """
    endpoint = resolve_endpoint(endpoint)
    run_dir = os.path.join(runs_root, time.strftime("%Y%m%d-%H%M%S"))
    os.makedirs(run_dir, exist_ok=True)

    result = env.reset(scenario, seed)
    step = 0
    while not result.done and step < max_steps:
        state_text = env.conns[0].request(
            {"cmd": "state", "format": "text"}
        )["state"]
        decision = env.conns[0].request({"cmd": "actions"})["decision"]
        options = decision["options"]
        legal_ids = [o["id"] for o in options]
        prompt = PROMPT_HEADER + state_text
        try:
            reply = complete(endpoint, prompt)
        except EndpointError:
            _write_step(run_dir, step, prompt, "<endpoint unreachable>",
                        None, False)
            raise
        action, fallback = choose_action(reply, legal_ids)
        _write_step(run_dir, step, prompt, reply, action, fallback)
        result = env.step(action)
        step += 1
    return run_dir


def _write_step(run_dir: str, step: int, prompt: str, reply: str,
                action: int | None, fallback: bool) -> None:
    path = os.path.join(run_dir, f"step_{step}.txt")
    with open(path, "w") as fh:
        fh.write("=== PROMPT ===\n")
        fh.write(prompt)
        fh.write("\n=== REPLY ===\n")
        fh.write(reply)
        fh.write("\n=== ACTION ===\n")
        if action is None:
            fh.write("none (aborted)\n")
        else:
            fh.write(f"{action}{'  (fallback: reply had no legal id)' if fallback else ''}\n")
