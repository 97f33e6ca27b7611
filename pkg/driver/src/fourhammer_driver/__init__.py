"""Network game driver: env adapter, PPO trainer, and LLM agent loop."""

from .env import (
    ACTION_SPACE, OBSERVATION_LENGTH, ProtocolError, ServerProcess,
    StepResult, WireEnv, local_env,
)

__version__ = "0.1.0"

__all__ = [
    "ACTION_SPACE", "OBSERVATION_LENGTH", "ProtocolError", "ServerProcess",
    "StepResult", "WireEnv", "local_env", "__version__",
]
