"""Driver-level acceptance checks: PPO choice-optimality and the LLM loop."""

import os
import time

import numpy as np

from fourhammer_driver import llm
from fourhammer_driver.ppo import PpoConfig, train

OPTIMAL_SELECT_ID = 10  # the long-range unit's selection action


def verdict(ok, name):
    print(f"{'PASS' if ok else 'FAIL'}: {name}")
    assert ok, name


class TestAcceptance:
    def test_ppo_reaches_optimal_choice(self, env, tmp_path):
        """lr 1e-5 policy picks the better unit >= 95% within 50 iterations."""
        start = time.monotonic()
        cfg = PpoConfig(
            scenario="single_shooting_maximize",
            iterations=50,
            episodes_per_iteration=64,
            lr=1e-5,
            seed=0,
        )
        result = train(env, cfg, out_dir=str(tmp_path),
                       stop_at_probability=0.97,
                       optimal_action_id=OPTIMAL_SELECT_ID)
        elapsed = time.monotonic() - start

        first = env.reset("single_shooting_maximize", 0)
        probs = result.policy.action_probabilities(first.observation, first.mask)
        pick_rate = float(probs[OPTIMAL_SELECT_ID])

        halves = [v for _, v in result.curve]
        mid = len(halves) // 2
        trend_up = np.mean(halves[mid:]) > np.mean(halves[:mid])

        ok = (
            pick_rate >= 0.95
            and len(result.curve) <= 50
            and elapsed <= 15 * 60
            and trend_up
            and (tmp_path / "curve.csv").exists()
            and (tmp_path / "curve.png").exists()
        )
        verdict(ok, f"ppo optimal pick rate {pick_rate:.3f} "
                    f"in {len(result.curve)} iterations ({elapsed:.0f}s)")

    def test_llm_stub_full_game_with_transcript(self, env, tmp_path):
        """Offline stub plays a full game; per-decision transcript archived."""
        run_dir = llm.run_llm_game(env, "full_game", 1,
                                   endpoint=llm.STUB_ENDPOINT,
                                   runs_root=str(tmp_path))
        steps = sorted(os.listdir(run_dir))
        content = [open(os.path.join(run_dir, f)).read() for f in steps]
        ok = (
            len(steps) > 0
            and all(f.startswith("step_") for f in steps)
            and all("PENDING DECISION" in c and "=== ACTION ===" in c
                    for c in content)
        )
        verdict(ok, f"llm stub game archived {len(steps)} transcript steps")
