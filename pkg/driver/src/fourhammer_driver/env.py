"""Wire-protocol environment adapter.

Talks to a running game server over newline-delimited JSON TCP and exposes a
gym-style reset/step/mask interface. The driver never imports the engine;
observations, masks, and rewards are all derived from protocol replies, so
a remote server works exactly like a local one.
"""

from __future__ import annotations

import json
import socket
import subprocess
import sys
import time
from dataclasses import dataclass, field

import numpy as np

OBSERVATION_LENGTH = 268
ACTION_SPACE = 1371

SCENARIOS = ("full_game", "single_turn", "single_shooting_maximize")


class ProtocolError(RuntimeError):
    """Server replied with an error or the connection failed."""


@dataclass
class StepResult:
    observation: np.ndarray
    mask: np.ndarray
    reward: float  # player-0 perspective; nonzero only when done
    done: bool
    actor: int  # -1 when done


class ServerProcess:
    """Own one engine server subprocess for the lifetime of this object."""

    def __init__(self, port: int, scenario: str = "full_game", seed: int = 0,
                 command: list[str] | None = None):
        self.port = port
        base = command or [sys.executable, "-m", "fourhammer.cli"]
        self.proc = subprocess.Popen(
            base + ["serve", "--port", str(port), "--scenario", scenario,
                    "--seed", str(seed)],
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
        )
        self._wait_ready()

    def _wait_ready(self, timeout: float = 10.0) -> None:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if self.proc.poll() is not None:
                raise ProtocolError("server process exited during startup")
            try:
                with socket.create_connection(("127.0.0.1", self.port), 0.2):
                    return
            except OSError:
                time.sleep(0.05)
        raise ProtocolError(f"server on port {self.port} never became ready")

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class _Connection:
    """One seat's blocking JSON-lines connection; skips broadcast frames."""

    def __init__(self, host: str, port: int):
        self.sock = socket.create_connection((host, port), timeout=30)
        self.file = self.sock.makefile("r", encoding="utf-8")

    def request(self, obj: dict) -> dict:
        try:
            self.sock.sendall((json.dumps(obj) + "\n").encode("utf-8"))
            while True:
                line = self.file.readline()
                if not line:
                    raise ProtocolError("connection closed by server")
                msg = json.loads(line)
                if "broadcast" in msg:
                    continue
                return msg
        except OSError as e:
            raise ProtocolError(f"connection lost: {e}") from None

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


class WireEnv:
    """reset/step adapter over the wire; holds both seats of one session."""

    def __init__(self, host: str, port: int):
        self.conns = [_Connection(host, port), _Connection(host, port)]
        for seat, conn in enumerate(self.conns):
            rep = conn.request({"cmd": "seat", "seat": f"p{seat}"})
            if not rep.get("ok"):
                raise ProtocolError(f"could not claim seat p{seat}: {rep}")
        self.scenario = "full_game"
        self._start_models = 0
        self._start_target_wounds = 0
        self._actor = -1

    # ------------------------------------------------------------------

    def _ok(self, conn_index: int, obj: dict) -> dict:
        rep = self.conns[conn_index].request(obj)
        if not rep.get("ok"):
            raise ProtocolError(f"{obj.get('cmd')} failed: {rep}")
        return rep

    def _observation(self) -> np.ndarray:
        rep = self._ok(0, {"cmd": "state", "format": "tensor"})
        obs = np.asarray(rep["state"], dtype=np.float32)
        if obs.shape != (OBSERVATION_LENGTH,):
            raise ProtocolError(f"bad observation length {obs.shape}")
        return obs

    def _decision(self) -> dict | None:
        rep = self._ok(0, {"cmd": "actions"})
        return rep["decision"]

    def _mask(self, decision: dict) -> np.ndarray:
        mask = np.zeros(ACTION_SPACE, dtype=np.uint8)
        for opt in decision["options"]:
            mask[opt["id"]] = 1
        return mask

    def _state_doc(self) -> dict:
        return self._ok(0, {"cmd": "state", "format": "json"})["state"]

    # ------------------------------------------------------------------

    def reset(self, scenario: str, seed: int) -> StepResult:
        self._ok(0, {"cmd": "reset", "scenario": scenario, "seed": seed})
        self.scenario = scenario
        doc = self._state_doc()
        self._start_models = sum(len(u["models"]) for u in doc["units"])
        self._start_target_wounds = sum(
            m["wounds"] for u in doc["units"] if u["unit_id"] == 8
            for m in u["models"]
        )
        decision = self._decision()
        if decision is None:
            return StepResult(self._observation(),
                              np.zeros(ACTION_SPACE, dtype=np.uint8),
                              self._terminal_reward(), True, -1)
        self._actor = decision["actor"]
        return StepResult(self._observation(), self._mask(decision), 0.0,
                          False, self._actor)

    def step(self, action_id: int) -> StepResult:
        if self._actor < 0:
            raise ProtocolError("step on a finished episode")
        rep = self.conns[self._actor].request(
            {"cmd": "apply", "id": int(action_id)}
        )
        if not rep.get("ok"):
            raise ProtocolError(f"apply rejected: {rep}")
        decision = self._decision()
        if decision is None:
            self._actor = -1
            return StepResult(self._observation(),
                              np.zeros(ACTION_SPACE, dtype=np.uint8),
                              self._terminal_reward(), True, -1)
        self._actor = decision["actor"]
        return StepResult(self._observation(), self._mask(decision), 0.0,
                          False, self._actor)

    # ------------------------------------------------------------------

    def _terminal_reward(self) -> float:
        """Player-0 terminal reward per the scenario's rule."""
        doc = self._state_doc()
        if self.scenario == "full_game":
            winner = doc["terminal"]["winner"]
            return 1.0 if winner == 0 else -1.0 if winner == 1 else 0.0
        if self.scenario == "single_turn":
            own = enemy = 0
            for u in doc["units"]:
                alive = sum(1 for m in u["models"] if m["wounds"] > 0)
                if u["owner"] == 0:
                    own += alive
                else:
                    enemy += alive
            return (own - enemy) / self._start_models
        # single_shooting_maximize
        remaining = sum(
            m["wounds"] for u in doc["units"] if u["unit_id"] == 8
            for m in u["models"]
        )
        start = self._start_target_wounds
        return (start - remaining) / start if start else 0.0

    def close(self) -> None:
        for conn in self.conns:
            conn.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def local_env(port: int, scenario: str = "full_game",
              seed: int = 0) -> tuple[ServerProcess, WireEnv]:
    """Spawn a server subprocess on ``port`` and connect an env to it."""
    server = ServerProcess(port, scenario, seed)
    return server, WireEnv("127.0.0.1", port)
