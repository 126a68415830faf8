"""
Moment-Matching Action Diversity Workflow
Trains a joint policy whose selected agents act differently from known policies
on the known policies' own states
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from arena.world import NUM_AGENTS
from learner.policy import ALL_ACTIONS, greedy_actions, init_policy_params
from learner.replay import TransitionBatch
from learner.training import TrainingLoop, evaluate_policy, run_episode
from metrics.mmd import agreement_features, chunk_transitions, mmd
from stores.trajectory_store import DemonstrationEpisode
from utils.errors import ConfigurationError, UsageError
from utils.logging_setup import kv
from utils.seeding import derive_rng, episode_seeds

logger = logging.getLogger(__name__)


class PenaltyConfig(BaseModel):
    """
    Penalty size and how much relabeled known data enters the replay buffer.

    Every `relabel_interval_steps` fresh environment steps, each known
    policy contributes one sampled batch of `relabel_batch_size`
    demonstrations; of the penalized copies at most
    floor(mixing_ratio * relabel_interval_steps) are inserted per round,
    split evenly between known policies.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    penalty: float = Field(1.0, ge=0.0)
    relabel_batch_size: int = Field(128, gt=0)
    relabel_interval_steps: int = Field(256, gt=0)
    mixing_ratio: float = Field(0.5, ge=0.0, le=1.0)

    @property
    def relabel_cap(self):
        return math.floor(self.mixing_ratio * self.relabel_interval_steps)


@dataclass(frozen=True)
class AgentSelection:
    """The set L of agents forced to act differently (0-based indices)."""

    agents: frozenset = frozenset()

    def __post_init__(self):
        agents = frozenset(int(a) for a in self.agents)
        bad = sorted(a for a in agents if a not in range(NUM_AGENTS))
        if bad:
            raise ConfigurationError(f"Agent selection {sorted(agents)} contains unknown agents {bad}")
        object.__setattr__(self, "agents", agents)

    def __iter__(self):
        return iter(sorted(self.agents))

    def __len__(self):
        return len(self.agents)

    def __bool__(self):
        return bool(self.agents)

    def to_list(self):
        return sorted(self.agents)


@dataclass
class DemonstrationBuffer:
    """Greedy rollouts of a frozen policy, with their provenance."""

    episodes: list
    seed: int

    @property
    def transitions(self):
        return [t for ep in self.episodes for t in ep.transitions]

    @property
    def episode_count(self):
        return len(self.episodes)

    def __len__(self):
        return sum(len(ep.transitions) for ep in self.episodes)

    def outcomes(self):
        return [ep.outcome for ep in self.episodes]


@dataclass
class KnownPolicy:
    policy_id: str
    params: object
    demonstrations: DemonstrationBuffer
    report: dict = field(default_factory=dict)


def collect_demonstrations(params, arena, episodes, seed):
    """
    Run `params` greedily for `episodes` episodes and keep every transition
    with its original task reward.

    Returns:
        DemonstrationBuffer: Deterministic given (params, seed)
    """
    if episodes < 1:
        raise UsageError(f"episodes must be >= 1, got {episodes}")
    collected = []
    for ep_seed in episode_seeds(seed, episodes, tag="demos"):
        result = run_episode(params, arena, ep_seed, mode="greedy")
        collected.append(DemonstrationEpisode(ep_seed, result.outcome.value, result.transitions))
    return DemonstrationBuffer(episodes=collected, seed=int(seed))


def _match_mask(params, batch, selection):
    """Row i is True when any selected agent's greedy action equals the stored one."""
    matched = np.zeros(len(batch), dtype=bool)
    for agent in selection:
        matched |= greedy_actions(params, agent, batch.states) == batch.actions[:, agent]
    return matched


def matches_known(params, transition, selection):
    """
    True (penalize) unless every selected agent's greedy action differs from
    the known action stored in `transition`.

    Raises:
        UsageError: If the selection is empty
    """
    if not selection:
        raise UsageError("matches_known needs a nonempty agent selection")
    batch = TransitionBatch.from_transitions([transition])
    return bool(_match_mask(params, batch, selection)[0])


def relabel_known_batch(params, batch, selection, penalty):
    """
    Penalized copies of the known transitions the new policy still imitates.

    Matched transitions keep their state, known joint action, next state
    and done flag; only the reward drops by exactly `penalty.penalty`. Transitions where
    every selected agent already differs are dropped. Order is preserved.
    """
    if not selection:
        raise UsageError("relabel_known_batch needs a nonempty agent selection")
    if not batch:
        return []
    matched = _match_mask(params, TransitionBatch.from_transitions(list(batch)), selection)
    return [t.with_reward(t.reward - penalty.penalty) for t, hit in zip(batch, matched) if hit]


def disagreement_rates(params, known, selection):
    """Per selected agent: fraction of demonstration states where the greedy action differs."""
    batch = TransitionBatch.from_transitions(known.demonstrations.transitions)
    return {
        agent: float(np.mean(greedy_actions(params, agent, batch.states) != batch.actions[:, agent]))
        for agent in selection
    }


def mmd_against(params, known, chunk_size):
    """MMD between the known policy's self-agreement and `params`' agreement on its chunks."""
    transitions = known.demonstrations.transitions
    size = min(chunk_size, len(transitions))
    chunks = chunk_transitions(transitions, size)
    reference = [agreement_features(c, known.params, size) for c in chunks]
    evaluated = [agreement_features(c, params, size) for c in chunks]
    return mmd(reference, evaluated)


class MomentMatchingDiversityWorkflow:
    """
    Moment-matching action diversity:
    1. Roll out the new policy and store task-reward transitions in the replay buffer
    2. Every relabel round, sample each known policy's demonstrations
    3. Penalize the ones where the selected agents still act like the known policy
    4. Update with SAC from the replay buffer
    """

    def __init__(self, known, selection, penalty, sac, arena, seed, action_mask=ALL_ACTIONS):
        self.known = list(known)
        self.selection = selection if isinstance(selection, AgentSelection) else AgentSelection(frozenset(selection))
        self.penalty = penalty
        self.sac = sac
        self.arena = arena
        self.seed = seed
        self.action_mask = action_mask
        self.relabel_rng = derive_rng(seed, "relabel")
        self.fresh_steps = 0
        self.relabeled_inserted = 0
        self.relabel_rounds = 0
        self.max_round_fraction = 0.0
        self._validate()

    def _validate(self):
        if not self.selection and self.known:
            raise ConfigurationError("Known policies given but no agents selected")
        for known in self.known:
            if len(known.demonstrations) == 0:
                raise ConfigurationError(f"Known policy '{known.policy_id}' has an empty demonstration buffer")
        if self.known and self.selection and self.penalty.relabel_cap // len(self.known) == 0:
            raise ConfigurationError(
                "Relabel quota per known policy is 0",
                [f"floor(mixing_ratio * relabel_interval_steps) = {self.penalty.relabel_cap} "
                 f"is smaller than the {len(self.known)} known policies"],
            )

    def _relabel_hook(self, loop):
        self.fresh_steps += 1
        if loop.env_steps % self.penalty.relabel_interval_steps != 0:
            return
        cap = self.penalty.relabel_cap
        quota = cap // len(self.known)
        inserted = 0
        for known in self.known:
            demos = known.demonstrations.transitions
            idx = self.relabel_rng.integers(0, len(demos), size=self.penalty.relabel_batch_size)
            penalized = relabel_known_batch(loop.params, [demos[i] for i in idx], self.selection, self.penalty)
            penalized = penalized[:quota]
            loop.replay.extend(penalized)
            inserted += len(penalized)
        self.relabeled_inserted += inserted
        self.relabel_rounds += 1
        self.max_round_fraction = max(
            self.max_round_fraction, inserted / self.penalty.relabel_interval_steps
        )
        logger.debug(kv(event="relabel_round", step=loop.env_steps, inserted=inserted, cap=cap))

    def run(self, steps, eval_episodes=100, chunk_size=32):
        """
        Train the new joint policy for `steps` environment steps.

        Returns:
            tuple: (PolicyParams, report dict)
        """
        if steps < 0:
            raise UsageError(f"Step budget must be >= 0, got {steps}")
        params = init_policy_params(self.sac, derive_rng(self.seed, "init"), action_mask=self.action_mask)
        loop = TrainingLoop(params, self.arena, self.seed)
        if self.known and self.selection:
            loop.step_hooks.append(self._relabel_hook)
        loop.run(steps)
        return loop.params, self._report(loop, eval_episodes, chunk_size)

    def get_counters(self):
        return {
            "fresh_steps": self.fresh_steps,
            "relabeled_inserted": self.relabeled_inserted,
            "relabel_rounds": self.relabel_rounds,
            "max_round_fraction": self.max_round_fraction,
        }

    def _report(self, loop, eval_episodes, chunk_size):
        params = loop.params
        against = {}
        for known in self.known:
            rates = disagreement_rates(params, known, self.selection)
            against[known.policy_id] = {
                "disagreement": {str(agent): rate for agent, rate in rates.items()},
                "mmd": mmd_against(params, known, chunk_size).to_dict(),
            }
            logger.info(kv(event="diversity_vs_known", known=known.policy_id,
                           **{f"disagree_agent{a}": r for a, r in rates.items()}))
        report = {
            "agents": self.selection.to_list(),
            "known": [k.policy_id for k in self.known],
            "penalty": self.penalty.model_dump(),
            "env_steps": loop.env_steps,
            "updates": loop.update_count,
            "counters": self.get_counters(),
            "against_known": against,
            "train_curve_tail_win_rate": loop.curve_rows[-1]["win_rate"] if loop.curve_rows else None,
        }
        if eval_episodes > 0:
            evaluation = evaluate_policy(params, self.arena, eval_episodes, self.seed)
            report["evaluation"] = evaluation.summary()
            logger.info(kv(event="diverse_policy_eval", win_rate=evaluation.win_rate))
        return report


def train_diverse_policy(known, selection, penalty, sac, arena, seed, steps,
                         eval_episodes=100, chunk_size=32, action_mask=ALL_ACTIONS):
    """Moment-matching action diversity; with no known policies and no agents it equals train_baseline."""
    workflow = MomentMatchingDiversityWorkflow(known, selection, penalty, sac, arena, seed, action_mask)
    return workflow.run(steps, eval_episodes=eval_episodes, chunk_size=chunk_size)
