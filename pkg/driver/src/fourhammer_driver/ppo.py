"""Masked-policy PPO over the wire-protocol environment.

One learner policy plays seat p0. For self-play scenarios the opponent is
sampled uniformly from the last few policy snapshots (random play until the
first snapshot exists). Each iteration collects a fixed number of episodes,
runs clipped-surrogate updates, and logs the mean player-0 return.
"""

from __future__ import annotations

import copy
import json
import os
import random
from dataclasses import asdict, dataclass

import numpy as np
import torch
from torch import nn

from .env import ACTION_SPACE, OBSERVATION_LENGTH, WireEnv

SNAPSHOT_POOL_SIZE = 5

# The final layer starts at zero (uniform masked policy) and its logits are
# scaled up, so even a very small learning rate moves action probabilities
# quickly once updates accumulate.
LOGIT_SCALE = 100.0


@dataclass
class PpoConfig:
    scenario: str = "single_shooting_maximize"
    iterations: int = 50
    episodes_per_iteration: int = 64
    lr: float = 1e-5
    clip: float = 0.2
    epochs: int = 10
    entropy_coef: float = 0.0
    value_coef: float = 0.5
    hidden: int = 64
    seed: int = 0
    self_play: bool = False


class MaskedPolicy(nn.Module):
    def __init__(self, hidden: int = 64):
        super().__init__()
        self.body = nn.Sequential(
            nn.Linear(OBSERVATION_LENGTH, hidden),
            nn.Tanh(),
        )
        self.policy_head = nn.Linear(hidden, ACTION_SPACE)
        self.value_head = nn.Linear(hidden, 1)
        nn.init.zeros_(self.policy_head.weight)
        nn.init.zeros_(self.policy_head.bias)

    def forward(self, obs: torch.Tensor, mask: torch.Tensor):
        h = self.body(obs)
        logits = self.policy_head(h) * LOGIT_SCALE
        logits = logits.masked_fill(mask == 0, float("-inf"))
        return logits, self.value_head(h).squeeze(-1)

    def distribution(self, obs: torch.Tensor, mask: torch.Tensor):
        logits, value = self(obs, mask)
        return torch.distributions.Categorical(logits=logits), value

    @torch.no_grad()
    def act(self, obs: np.ndarray, mask: np.ndarray,
            generator: torch.Generator | None = None) -> tuple[int, float, float]:
        obs_t = torch.from_numpy(obs).unsqueeze(0)
        mask_t = torch.from_numpy(mask).unsqueeze(0)
        dist, value = self.distribution(obs_t, mask_t)
        probs = dist.probs.squeeze(0)
        if generator is None:
            action = torch.multinomial(probs, 1).item()
        else:
            action = torch.multinomial(probs, 1, generator=generator).item()
        logp = torch.log(probs[action] + 1e-12).item()
        return int(action), logp, float(value.item())

    @torch.no_grad()
    def action_probabilities(self, obs: np.ndarray, mask: np.ndarray) -> np.ndarray:
        obs_t = torch.from_numpy(obs).unsqueeze(0)
        mask_t = torch.from_numpy(mask).unsqueeze(0)
        dist, _ = self.distribution(obs_t, mask_t)
        return dist.probs.squeeze(0).numpy()


@dataclass
class TrainResult:
    curve: list[tuple[int, float]]
    policy: MaskedPolicy
    metadata: dict


class NanLossError(RuntimeError):
    pass


def _rollout(env: WireEnv, policy: MaskedPolicy, opponent, cfg: PpoConfig,
             seed: int, rng: random.Random):
    """One episode; returns (learner transitions, player-0 return)."""
    transitions = []
    result = env.reset(cfg.scenario, seed)
    while not result.done:
        if result.actor == 0:
            action, logp, value = policy.act(result.observation, result.mask)
            transitions.append(
                (result.observation, result.mask, action, logp, value)
            )
        elif opponent is not None:
            action, _, _ = opponent.act(result.observation, result.mask)
        else:
            legal = np.flatnonzero(result.mask)
            action = int(legal[rng.randrange(len(legal))])
        result = env.step(action)
    return transitions, result.reward


def train(env: WireEnv, cfg: PpoConfig, out_dir: str | None = None,
          stop_at_probability: float | None = None,
          optimal_action_id: int | None = None) -> TrainResult:
    """Run PPO; returns the learning curve and the trained policy.

    ``stop_at_probability`` allows early exit once the policy's probability
    of ``optimal_action_id`` at the initial decision exceeds the threshold.
    """
    torch.manual_seed(cfg.seed)
    rng = random.Random(cfg.seed)
    policy = MaskedPolicy(cfg.hidden)
    optimizer = torch.optim.Adam(policy.parameters(), lr=cfg.lr)
    snapshots: list[MaskedPolicy] = []
    curve: list[tuple[int, float]] = []
    episode_seed = cfg.seed * 1_000_003

    for iteration in range(cfg.iterations):
        batch_obs, batch_mask, batch_act = [], [], []
        batch_logp, batch_adv, batch_ret = [], [], []
        returns = []
        for _ in range(cfg.episodes_per_iteration):
            opponent = None
            if cfg.self_play and snapshots:
                opponent = snapshots[rng.randrange(len(snapshots))]
            transitions, ep_return = _rollout(
                env, policy, opponent, cfg, episode_seed, rng
            )
            episode_seed += 1
            returns.append(ep_return)
            for obs, mask, action, logp, value in transitions:
                batch_obs.append(obs)
                batch_mask.append(mask)
                batch_act.append(action)
                batch_logp.append(logp)
                batch_ret.append(ep_return)
                batch_adv.append(ep_return - value)

        mean_return = float(np.mean(returns))
        curve.append((iteration, mean_return))

        if batch_obs:
            obs_t = torch.from_numpy(np.stack(batch_obs))
            mask_t = torch.from_numpy(np.stack(batch_mask))
            act_t = torch.tensor(batch_act)
            old_logp_t = torch.tensor(batch_logp, dtype=torch.float32)
            ret_t = torch.tensor(batch_ret, dtype=torch.float32)
            adv_t = torch.tensor(batch_adv, dtype=torch.float32)
            if adv_t.numel() > 1 and float(adv_t.std()) > 1e-8:
                adv_t = (adv_t - adv_t.mean()) / (adv_t.std() + 1e-8)

            for _ in range(cfg.epochs):
                dist, value = policy.distribution(obs_t, mask_t)
                logp = dist.log_prob(act_t)
                ratio = torch.exp(logp - old_logp_t)
                clipped = torch.clamp(ratio, 1 - cfg.clip, 1 + cfg.clip)
                policy_loss = -torch.min(ratio * adv_t, clipped * adv_t).mean()
                value_loss = ((value - ret_t) ** 2).mean()
                entropy = dist.entropy().mean()
                loss = (policy_loss + cfg.value_coef * value_loss
                        - cfg.entropy_coef * entropy)
                if not torch.isfinite(loss):
                    raise NanLossError(
                        f"non-finite loss at iteration {iteration}: "
                        f"policy={policy_loss.item()} value={value_loss.item()}"
                    )
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()

        if cfg.self_play:
            snap = MaskedPolicy(cfg.hidden)
            snap.load_state_dict(copy.deepcopy(policy.state_dict()))
            snap.eval()
            snapshots.append(snap)
            del snapshots[:-SNAPSHOT_POOL_SIZE]

        if stop_at_probability is not None and optimal_action_id is not None:
            first = env.reset(cfg.scenario, 0)
            probs = policy.action_probabilities(first.observation, first.mask)
            if probs[optimal_action_id] >= stop_at_probability:
                break

    metadata = {
        "config": asdict(cfg),
        "network": {"hidden": cfg.hidden, "logit_scale": LOGIT_SCALE,
                    "optimizer": "adam"},
        "iterations_run": len(curve),
    }
    if out_dir is not None:
        save_run(out_dir, curve, policy, metadata)
    return TrainResult(curve, policy, metadata)


def save_run(out_dir: str, curve, policy: MaskedPolicy, metadata: dict) -> list[str]:
    """Write curve CSV + figure, policy snapshot, and run metadata."""
    from .report import write_curve

    os.makedirs(out_dir, exist_ok=True)
    paths = write_curve(curve, out_dir)
    snap_path = os.path.join(out_dir, "policy.pt")
    torch.save(policy.state_dict(), snap_path)
    meta_path = os.path.join(out_dir, "metadata.json")
    with open(meta_path, "w") as fh:
        json.dump(metadata, fh, indent=2)
    return paths + [snap_path, meta_path]


def load_policy(path: str, hidden: int = 64) -> MaskedPolicy:
    policy = MaskedPolicy(hidden)
    policy.load_state_dict(torch.load(path, weights_only=True))
    policy.eval()
    return policy
