"""Deterministic dice stream.

All randomness in the engine flows through a single SplitMix64 stream kept
inside the game state, so that a (seed, action list) pair replays to an
identical game on any platform. The generator is specified bit-exactly to
allow cross-language replay of saved games.
"""

from __future__ import annotations

from dataclasses import dataclass

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


@dataclass
class RngStream:
    """SplitMix64 state plus a draw counter for diagnostics."""

    state: int = 0
    draws: int = 0

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        z = z ^ (z >> 31)
        self.draws += 1
        return z

    def next_d6(self) -> int:
        """Roll one die. Modulo bias is below 2**-62 and accepted."""
        return self.next_u64() % 6 + 1

    def next_2d6(self) -> tuple[int, int]:
        return self.next_d6(), self.next_d6()

    def next_below(self, n: int) -> int:
        """Uniform-ish integer in [0, n); used by the random agent only."""
        return self.next_u64() % n

    def clone(self) -> "RngStream":
        return RngStream(self.state, self.draws)
