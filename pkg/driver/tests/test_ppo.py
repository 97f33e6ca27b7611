"""PPO trainer: masking, reproducibility, artifacts, and edge cases."""

import csv
import os

import numpy as np
import pytest
import torch

from fourhammer_driver.ppo import (
    MaskedPolicy, NanLossError, PpoConfig, load_policy, train,
)


class TestPolicy:
    def test_initial_policy_is_uniform_over_legal(self):
        policy = MaskedPolicy()
        obs = np.random.default_rng(0).random(268).astype(np.float32)
        mask = np.zeros(1371, dtype=np.uint8)
        mask[[9, 10, 0]] = 1
        probs = policy.action_probabilities(obs, mask)
        legal = probs[[0, 9, 10]]
        assert np.allclose(legal, 1 / 3, atol=1e-5)
        assert probs.sum() == pytest.approx(1.0, abs=1e-5)

    def test_illegal_actions_have_zero_probability(self):
        policy = MaskedPolicy()
        obs = np.zeros(268, dtype=np.float32)
        mask = np.zeros(1371, dtype=np.uint8)
        mask[5] = 1
        probs = policy.action_probabilities(obs, mask)
        assert probs[5] == pytest.approx(1.0)
        assert probs[[0, 1, 100]].sum() == 0.0

    def test_save_load_roundtrip(self, tmp_path):
        policy = MaskedPolicy()
        path = tmp_path / "p.pt"
        torch.save(policy.state_dict(), str(path))
        again = load_policy(str(path))
        obs = np.random.default_rng(1).random(268).astype(np.float32)
        mask = np.ones(1371, dtype=np.uint8)
        assert np.allclose(policy.action_probabilities(obs, mask),
                           again.action_probabilities(obs, mask))


class TestTraining:
    def test_zero_iterations_is_a_noop_with_empty_curve(self, env, tmp_path):
        cfg = PpoConfig(iterations=0)
        result = train(env, cfg, out_dir=str(tmp_path))
        assert result.curve == []
        with open(tmp_path / "curve.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows == [["iteration", "mean_return"]]
        assert (tmp_path / "curve.png").exists()
        assert (tmp_path / "metadata.json").exists()

    def test_short_run_learns_and_writes_artifacts(self, env, tmp_path):
        cfg = PpoConfig(iterations=4, episodes_per_iteration=16, seed=3)
        result = train(env, cfg, out_dir=str(tmp_path))
        assert len(result.curve) == 4
        assert all(np.isfinite(v) for _, v in result.curve)
        assert result.metadata["config"]["lr"] == pytest.approx(1e-5)
        with open(tmp_path / "curve.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["iteration", "mean_return"]
        assert len(rows) == 5

    def test_reproducible_given_seeds(self, env):
        cfg = PpoConfig(iterations=2, episodes_per_iteration=8, seed=11)
        a = train(env, cfg)
        b = train(env, cfg)
        assert a.curve == b.curve

    def test_self_play_produces_a_curve(self, env):
        cfg = PpoConfig(scenario="single_turn", iterations=2,
                        episodes_per_iteration=4, self_play=True, seed=5)
        result = train(env, cfg)
        assert len(result.curve) == 2
        assert all(-1.0 <= v <= 1.0 for _, v in result.curve)

    def test_nan_loss_aborts_with_diagnostics(self, env, monkeypatch):
        cfg = PpoConfig(iterations=1, episodes_per_iteration=4)

        bad = torch.full((1,), float("nan"))

        def poisoned(self, obs, mask):
            dist = torch.distributions.Categorical(
                logits=torch.where(mask == 0, -torch.inf, bad)
            )
            return dist, torch.full(obs.shape[:1], float("nan"))

        monkeypatch.setattr(MaskedPolicy, "distribution", poisoned)
        with pytest.raises((NanLossError, ValueError)):
            train(env, cfg)
