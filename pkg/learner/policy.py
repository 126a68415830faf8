"""
Joint Policy
Per-agent actor and twin critics, softmax distributions, greedy and sampled actions
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from arena.world import NUM_ACTIONS, NUM_AGENTS, OBS_SIZE, WhiteAction
from learner.mlp import Mlp, forward, init_mlp
from utils.errors import UsageError


class SacConfig(BaseModel):
    """Discrete SAC hyperparameters shared by both agents."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    gamma: float = Field(0.99, ge=0.0, lt=1.0)
    learning_rate: float = Field(3e-4, gt=0)
    tau: float = Field(0.005, gt=0.0, le=1.0)
    batch_size: int = Field(128, gt=0)
    replay_capacity: int = Field(100_000, gt=0)
    alpha: float = Field(0.05, gt=0)
    env_steps_per_round: int = Field(64, gt=0)
    updates_per_round: int = Field(32, gt=0)
    warmup_steps: int = Field(1_000, ge=0)
    hidden_sizes: tuple[int, ...] = (64, 64)
    optimizer: Literal["sgd", "adam"] = "sgd"
    grad_clip_norm: float = Field(10.0, gt=0)

    @model_validator(mode="after")
    def _check_sizes(self):
        if any(h <= 0 for h in self.hidden_sizes):
            raise ValueError(f"hidden_sizes must be positive, got {self.hidden_sizes}")
        return self


class Skill(str, Enum):
    ALL = "all"
    GUN = "gun"
    BOMB = "bomb"


def skill_mask(skill):
    """Allowed-action mask: gun-only drops FireBomb, bomb-only drops FireGun."""
    mask = [True] * NUM_ACTIONS
    skill = Skill(skill)
    if skill == Skill.GUN:
        mask[WhiteAction.FIRE_BOMB] = False
    elif skill == Skill.BOMB:
        mask[WhiteAction.FIRE_GUN] = False
    return tuple(mask)


ALL_ACTIONS = skill_mask(Skill.ALL)


@dataclass
class AgentNetworks:
    actor: Mlp
    q1: Mlp
    q2: Mlp
    q1_target: Mlp
    q2_target: Mlp

    def networks(self):
        return {
            "actor": self.actor,
            "q1": self.q1,
            "q2": self.q2,
            "q1_target": self.q1_target,
            "q2_target": self.q2_target,
        }


@dataclass
class PolicyParams:
    """Trainable parameters of one joint policy plus the settings that produced them."""

    agents: list
    alpha: float
    sac: SacConfig
    action_mask: tuple = field(default=ALL_ACTIONS)

    def __post_init__(self):
        if self.alpha <= 0:
            raise UsageError(f"alpha must be positive, got {self.alpha}")
        if len(self.action_mask) != NUM_ACTIONS or not any(self.action_mask):
            raise UsageError(f"Invalid action mask {self.action_mask}")
        for networks in self.agents:
            for online, target in ((networks.q1, networks.q1_target), (networks.q2, networks.q2_target)):
                if tuple(online.sizes) != tuple(target.sizes):
                    raise UsageError("Target critic shapes must equal critic shapes")

    @property
    def mask_array(self):
        return np.asarray(self.action_mask, dtype=bool)

    def copy(self):
        return PolicyParams(
            agents=[
                AgentNetworks(**{name: net.copy() for name, net in a.networks().items()})
                for a in self.agents
            ],
            alpha=self.alpha,
            sac=self.sac,
            action_mask=tuple(self.action_mask),
        )


def init_policy_params(sac, rng, action_mask=ALL_ACTIONS):
    """Fresh networks for both agents; target critics start as copies."""
    sizes = (OBS_SIZE, *sac.hidden_sizes, NUM_ACTIONS)
    agents = []
    for _ in range(NUM_AGENTS):
        actor = init_mlp(sizes, rng, output_scale=0.01)
        q1 = init_mlp(sizes, rng)
        q2 = init_mlp(sizes, rng)
        agents.append(AgentNetworks(actor=actor, q1=q1, q2=q2, q1_target=q1.copy(), q2_target=q2.copy()))
    return PolicyParams(agents=agents, alpha=sac.alpha, sac=sac, action_mask=tuple(action_mask))


def masked_log_softmax(logits, mask):
    """
    Log-probabilities with masked actions at -inf.

    Works on one logit vector or a (B, A) batch.
    """
    logits = np.where(mask, logits, -np.inf)
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    log_norm = np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))
    return shifted - log_norm


def distribution_from_logits(logits, mask):
    """Returns (probabilities, log-probabilities with masked entries set to 0)."""
    log_probs = masked_log_softmax(logits, mask)
    probs = np.exp(log_probs)
    probs = probs / np.sum(probs, axis=-1, keepdims=True)
    return probs, np.where(mask, log_probs, 0.0)


def _check_agent(agent):
    if agent not in range(NUM_AGENTS):
        raise UsageError(f"Agent index must be in [0, {NUM_AGENTS}), got {agent}")


def policy_distribution(params, agent, state):
    """
    pi(.|s) for one agent: softmax over the actor's allowed logits.

    Args:
        params (PolicyParams): Joint policy
        agent (int): 0 or 1
        state (np.ndarray): Global state vector (or a batch of them)

    Returns:
        np.ndarray: Probabilities over the 7 actions, summing to 1
    """
    _check_agent(agent)
    logits = forward(params.agents[agent].actor, state)
    probs, _ = distribution_from_logits(logits, params.mask_array)
    return probs


def _greedy_one(params, agent, state):
    # np.argmax returns the first maximizer
    return int(np.argmax(policy_distribution(params, agent, state)))


def greedy_actions(params, agent, states):
    """
    Lowest-index argmax of pi for every row of `states`.

    Rows are evaluated one at a time as fresh vectors, the same path `act`
    takes, so a stored greedy action is always reproduced bit for bit.
    """
    _check_agent(agent)
    rows = np.atleast_2d(np.asarray(states, dtype=np.float64))
    return np.fromiter(
        (_greedy_one(params, agent, np.array(row)) for row in rows), dtype=np.int64, count=len(rows)
    )


def sample_from(probs, rng):
    """Inverse-CDF draw; zero-probability (masked) actions are never returned."""
    u = rng.random()
    index = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    allowed = np.flatnonzero(probs > 0)
    return int(min(index, allowed[-1]))


def act(params, agent, state, mode="greedy", rng=None):
    """
    Choose an action for one agent.

    mode="greedy" returns the lowest-index maximizer of pi(.|s);
    mode="sample" draws from pi(.|s) with `rng`.
    """
    if mode == "greedy":
        return _greedy_one(params, agent, np.array(state, dtype=np.float64))
    if mode == "sample":
        probs = policy_distribution(params, agent, state)
        if rng is None:
            raise UsageError("Sampling requires an rng")
        return sample_from(probs, rng)
    raise UsageError(f"Unknown action mode {mode!r}")


def entropy(probs):
    nz = probs[probs > 0]
    return float(-np.sum(nz * np.log(nz)))
