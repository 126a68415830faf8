"""
Training Loop
Arena rollouts, greedy evaluation and the off-policy SAC loop behind train_baseline
"""

import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from tqdm import tqdm

from arena.world import NUM_AGENTS, Outcome, observe, reset, step
from learner.policy import ALL_ACTIONS, act, init_policy_params
from learner.replay import ReplayBuffer, Transition
from learner.sac import make_optimizers, sac_update
from stores.trajectory_store import TickRecord, TrajectoryLog
from utils.errors import UsageError
from utils.logging_setup import kv, progress_enabled
from utils.seeding import derive_rng, episode_seeds

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["episode", "env_step", "return", "length", "outcome", "win_rate"]
WIN_RATE_WINDOW = 100


@dataclass
class EpisodeResult:
    seed: int
    transitions: list
    total_reward: float
    outcome: Outcome
    log: TrajectoryLog | None = None


def _event_dict(event):
    return {
        "shooter": event.shooter,
        "target": event.target,
        "weapon": event.weapon.value,
        "damage": event.damage,
    }


def run_episode(params, arena, seed, mode="greedy", rng=None, record=False):
    """
    Play one full episode with both agents.

    Args:
        params (PolicyParams): Joint policy
        arena (ArenaConfig): Arena rules
        seed (int): Reset seed
        mode (str): "greedy" or "sample"
        rng (np.random.Generator): Required for mode="sample"
        record (bool): Also build a TrajectoryLog

    Returns:
        EpisodeResult: Transitions carry the task reward
    """
    state = reset(arena, seed)
    log = None
    if record:
        log = TrajectoryLog(seed=int(seed), start_positions=[list(w.pos) for w in state.white])
    transitions = []
    total = 0.0
    obs = observe(state, arena)
    while True:
        actions = tuple(act(params, k, obs, mode=mode, rng=rng) for k in range(NUM_AGENTS))
        result = step(state, actions, arena)
        next_obs = observe(result.next_state, arena)
        transitions.append(Transition(obs, actions, result.reward, next_obs, result.done))
        total += result.reward
        if log is not None:
            nxt = result.next_state
            log.records.append(
                TickRecord(
                    tick=nxt.tick,
                    positions=[list(w.pos) for w in nxt.white],
                    actions=list(actions),
                    white_hp=[w.hp for w in nxt.white],
                    red_heading_deg=nxt.red.heading_deg,
                    red_hp=nxt.red.hp,
                    reward=result.reward,
                    events=[_event_dict(e) for e in result.events],
                )
            )
        state, obs = result.next_state, next_obs
        if result.done:
            if log is not None:
                log.outcome = result.outcome.value
            return EpisodeResult(int(seed), transitions, total, result.outcome, log)


@dataclass
class EvaluationReport:
    episodes: int
    win_rate: float
    mean_return: float
    outcomes: dict
    masked_action_count: int
    trajectories: list = field(default_factory=list)

    def summary(self):
        return {
            "episodes": self.episodes,
            "win_rate": self.win_rate,
            "mean_return": self.mean_return,
            "outcomes": dict(self.outcomes),
            "masked_action_count": self.masked_action_count,
        }


def evaluate_policy(params, arena, episodes, seed, record=False):
    """Greedy rollouts from `episodes` reset seeds derived from `seed`."""
    if episodes < 1:
        raise UsageError(f"episodes must be >= 1, got {episodes}")
    mask = params.action_mask
    outcomes = Counter()
    returns = []
    masked = 0
    logs = []
    for ep_seed in episode_seeds(seed, episodes, tag="eval"):
        result = run_episode(params, arena, ep_seed, mode="greedy", record=record)
        outcomes[result.outcome.value] += 1
        returns.append(result.total_reward)
        masked += sum(1 for t in result.transitions for a in t.actions if not mask[a])
        if record:
            logs.append(result.log)
    return EvaluationReport(
        episodes=episodes,
        win_rate=outcomes[Outcome.WIN.value] / episodes,
        mean_return=float(np.mean(returns)),
        outcomes=dict(outcomes),
        masked_action_count=masked,
        trajectories=logs,
    )


class TrainingLoop:
    """
    Off-policy loop: both agents sample actions, every transition goes into
    the shared replay buffer, and after warmup each round of
    `env_steps_per_round` steps runs `updates_per_round` SAC updates per agent.

    Step hooks run after every environment step with the loop as argument;
    the diversity workflow uses one to inject relabeled known transitions.
    """

    def __init__(self, params, arena, seed):
        self.params = params
        self.arena = arena
        self.sac = params.sac
        self.replay = ReplayBuffer(self.sac.replay_capacity)
        self.optimizers = make_optimizers(params)
        self.action_rng = derive_rng(seed, "actions")
        self.replay_rng = derive_rng(seed, "replay")
        self.episode_rng = derive_rng(seed, "episodes")
        self.step_hooks = []
        self.env_steps = 0
        self.update_count = 0
        self.curve_rows = []
        self.last_losses = {}
        self._state = None
        self._obs = None
        self._episode_seed = None
        self._episode_return = 0.0
        self._episode_length = 0

    def _start_episode(self):
        self._episode_seed = int(self.episode_rng.integers(0, 2**31 - 1))
        self._state = reset(self.arena, self._episode_seed)
        self._obs = observe(self._state, self.arena)
        self._episode_return = 0.0
        self._episode_length = 0

    def _finish_episode(self, outcome):
        wins = [row["outcome"] == Outcome.WIN.value for row in self.curve_rows[-(WIN_RATE_WINDOW - 1):]]
        wins.append(outcome == Outcome.WIN)
        self.curve_rows.append(
            {
                "episode": len(self.curve_rows),
                "env_step": self.env_steps,
                "return": self._episode_return,
                "length": self._episode_length,
                "outcome": outcome.value,
                "win_rate": float(np.mean(wins)),
            }
        )
        self._state = None

    def env_step(self):
        if self._state is None:
            self._start_episode()
        actions = tuple(
            act(self.params, k, self._obs, mode="sample", rng=self.action_rng)
            for k in range(NUM_AGENTS)
        )
        result = step(self._state, actions, self.arena)
        next_obs = observe(result.next_state, self.arena)
        self.replay.add(Transition(self._obs, actions, result.reward, next_obs, result.done))
        self.env_steps += 1
        self._episode_return += result.reward
        self._episode_length += 1
        self._state, self._obs = result.next_state, next_obs
        if result.done:
            self._finish_episode(result.outcome)

    def update_round(self):
        for _ in range(self.sac.updates_per_round):
            for agent in range(NUM_AGENTS):
                batch = self.replay.sample(self.sac.batch_size, self.replay_rng)
                _, report = sac_update(self.params, batch, agent, self.optimizers)
                self.last_losses[agent] = report
            self.update_count += 1

    def run(self, steps):
        """Advance `steps` environment steps (updates interleaved)."""
        bar = tqdm(total=steps, desc="train", unit="step", disable=not progress_enabled(), leave=False)
        for _ in range(steps):
            self.env_step()
            for hook in self.step_hooks:
                hook(self)
            if (
                self.env_steps % self.sac.env_steps_per_round == 0
                and self.env_steps >= self.sac.warmup_steps
                and len(self.replay) >= self.sac.batch_size
            ):
                self.update_round()
            if self.env_steps % 10_000 == 0:
                logger.info(kv(event="progress", **self.progress()))
            bar.update(1)
        bar.close()
        return self.params

    def progress(self):
        recent = self.curve_rows[-1]["win_rate"] if self.curve_rows else 0.0
        return {
            "env_step": self.env_steps,
            "updates": self.update_count,
            "episodes": len(self.curve_rows),
            "win_rate": recent,
        }

    def curve(self):
        return pd.DataFrame(self.curve_rows, columns=CURVE_COLUMNS)


def train_baseline(sac, arena, seed, steps, action_mask=ALL_ACTIONS):
    """
    Plain cooperative training (empty known-policy set, no selected agents).

    Args:
        sac (SacConfig): Learner hyperparameters
        arena (ArenaConfig): Arena rules
        seed (int): Master seed; identical seeds give identical results
        steps (int): Environment-step budget (0 returns the initial params)
        action_mask (tuple): Allowed actions, for skill-restricted policies

    Returns:
        tuple: (PolicyParams, training curve DataFrame)
    """
    if steps < 0:
        raise UsageError(f"Step budget must be >= 0, got {steps}")
    params = init_policy_params(sac, derive_rng(seed, "init"), action_mask=action_mask)
    loop = TrainingLoop(params, arena, seed)
    loop.run(steps)
    logger.info(kv(event="baseline_trained", seed=seed, **loop.progress()))
    return loop.params, loop.curve()
