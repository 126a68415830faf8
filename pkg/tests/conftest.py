"""Shared fixtures: small arenas, tiny learner configs and hand-built policies."""

from dataclasses import replace

import numpy as np
import pytest

from arena.config import ArenaConfig
from arena.world import NUM_ACTIONS, OBS_SIZE, reset
from learner.mlp import Mlp
from learner.policy import ALL_ACTIONS, AgentNetworks, PolicyParams, SacConfig, init_policy_params
from stores.config_store import EvaluationConfig, ExperimentConfig, TrainingConfig
from workflows.diversity import KnownPolicy, PenaltyConfig, collect_demonstrations


@pytest.fixture
def arena():
    return ArenaConfig()


@pytest.fixture
def short_arena():
    return ArenaConfig(max_ticks=30)


@pytest.fixture
def tiny_sac():
    return SacConfig(
        hidden_sizes=(8,),
        batch_size=8,
        replay_capacity=500,
        warmup_steps=16,
        env_steps_per_round=8,
        updates_per_round=2,
    )


@pytest.fixture
def tiny_params(tiny_sac):
    return init_policy_params(tiny_sac, np.random.default_rng(0))


@pytest.fixture
def tiny_penalty():
    return PenaltyConfig(relabel_batch_size=16, relabel_interval_steps=16, mixing_ratio=0.5)


@pytest.fixture
def tiny_experiment(short_arena, tiny_sac, tiny_penalty):
    return ExperimentConfig(
        arena=short_arena,
        sac=tiny_sac,
        penalty=tiny_penalty,
        evaluation=EvaluationConfig(eval_episodes=2, demo_episodes=2, chunk_size=8, compare_episodes=2),
        training=TrainingConfig(steps=40),
    )


def _zero_net(sizes):
    return Mlp(
        sizes=tuple(sizes),
        weights=[np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
        biases=[np.zeros(b) for b in sizes[1:]],
    )


def constant_policy(actions, action_mask=ALL_ACTIONS):
    """Joint policy whose greedy action for agent k is always actions[k]."""
    sizes = (OBS_SIZE, NUM_ACTIONS)
    agents = []
    for action in actions:
        actor = _zero_net(sizes)
        actor.biases[0][action] = 5.0
        q1, q2 = _zero_net(sizes), _zero_net(sizes)
        agents.append(AgentNetworks(actor=actor, q1=q1, q2=q2, q1_target=q1.copy(), q2_target=q2.copy()))
    return PolicyParams(agents=agents, alpha=0.05, sac=SacConfig(hidden_sizes=()), action_mask=action_mask)


@pytest.fixture
def make_constant_policy():
    return constant_policy


def place(state, white_positions=None, red_heading_deg=None, **red_fields):
    """Copy of `state` with whites moved and red fields overridden."""
    whites = list(state.white)
    if white_positions is not None:
        whites = [replace(w, pos=tuple(map(float, p))) for w, p in zip(whites, white_positions)]
    red = state.red
    if red_heading_deg is not None:
        red = replace(red, heading_deg=float(red_heading_deg))
    if red_fields:
        red = replace(red, **red_fields)
    return replace(state, white=tuple(whites), red=red)


@pytest.fixture
def placed_state(arena):
    """Default reset state plus the `place` helper."""
    return reset(arena, 0), place


@pytest.fixture
def known_policy(short_arena, tiny_params):
    demos = collect_demonstrations(tiny_params, short_arena, episodes=2, seed=11)
    return KnownPolicy(policy_id="base", params=tiny_params, demonstrations=demos)


