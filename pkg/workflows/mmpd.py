"""
Moment-Matching Policy Diversity Workflow
Runs a schedule of (agent selection, known policies) entries, growing the set of all policies
"""

import logging

from pydantic import BaseModel, ConfigDict, Field

from learner.policy import Skill, skill_mask
from learner.training import evaluate_policy, train_baseline
from utils.errors import ConfigurationError
from utils.logging_setup import config_hash, kv
from utils.seeding import derive_seed
from workflows.diversity import (
    AgentSelection,
    KnownPolicy,
    collect_demonstrations,
    train_diverse_policy,
)

logger = logging.getLogger(__name__)


class ScheduleEntry(BaseModel):
    """
    One new policy to train.

    agents: selected agents L (0-based); known: ids of known policies;
    id: registry id of the result (defaults to policy_<n>); skill: action
    restriction; seed: overrides master seed + entry index.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    agents: tuple[int, ...] = ()
    known: tuple[str, ...] = ()
    id: str | None = Field(None, min_length=1, pattern=r"^[A-Za-z0-9_.-]+$")
    skill: Skill = Skill.ALL
    seed: int | None = None

    def policy_id(self, index):
        return self.id or f"policy_{index}"


class DiversitySchedule(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    entries: tuple[ScheduleEntry, ...] = ()

    def __len__(self):
        return len(self.entries)


def validate_schedule(schedule, existing_ids=(), penalty=None):
    """
    Check a schedule before any training starts.

    The first entry is the baseline (no agents, no known policies) unless
    every policy it names is already registered.

    Args:
        schedule (DiversitySchedule): Entries in execution order
        existing_ids (iterable): Ids already in the registry
        penalty (PenaltyConfig): When given, every entry must get a nonzero relabel quota

    Raises:
        ConfigurationError: Listing every violation
    """
    existing = set(existing_ids)
    violations = []
    if len(schedule.entries) == 0:
        violations.append("schedule must contain at least one entry")
    produced = []
    for index, entry in enumerate(schedule.entries):
        policy_id = entry.policy_id(index)
        if policy_id in produced:
            violations.append(f"entry {index}: duplicate policy id '{policy_id}'")
        try:
            AgentSelection(frozenset(entry.agents))
        except ConfigurationError as e:
            violations.append(f"entry {index}: {e}")
        if index == 0 and (entry.agents or entry.known) and not (entry.known and set(entry.known) <= existing):
            violations.append(
                "entry 0: must be the baseline (no agents, no known policies) unless its known policies are registered"
            )
        if entry.known and not entry.agents:
            violations.append(f"entry {index}: known policies {list(entry.known)} given but no agents selected")
        if penalty is not None and entry.known and penalty.relabel_cap // len(entry.known) == 0:
            violations.append(
                f"entry {index}: relabel quota is 0 (cap {penalty.relabel_cap} for {len(entry.known)} known policies)"
            )
        available = existing | set(produced)
        for known_id in entry.known:
            if known_id == policy_id:
                violations.append(f"entry {index}: policy '{policy_id}' cannot be its own known policy")
            elif known_id not in available:
                violations.append(f"entry {index}: unknown policy id '{known_id}'")
        produced.append(policy_id)
    if violations:
        raise ConfigurationError("Invalid diversity schedule", violations)


def entry_hash(config, entry, seed):
    return config_hash(
        {
            "arena": config.arena.model_dump(mode="json"),
            "sac": config.sac.model_dump(mode="json"),
            "penalty": config.penalty.model_dump(mode="json"),
            "evaluation": config.evaluation.model_dump(mode="json"),
            "steps": config.training.steps,
            "entry": entry.model_dump(mode="json"),
            "seed": seed,
        }
    )


class MmpdWorkflow:
    """
    Iterative policy generation:
    1. Train the first policy with no known policies and no selected agents
    2. For each further entry, train against the chosen known policies
    3. Collect greedy demonstrations and add the policy to the set
    """

    def __init__(self, schedule, config, seed, registry=None):
        self.schedule = schedule
        self.config = config
        self.seed = int(seed)
        self.registry = registry
        self.skipped = []

    def _resolve(self, known_id, produced):
        if known_id in produced:
            return produced[known_id]
        return self.registry.query(known_id)

    def _train_entry(self, index, entry, known, entry_seed):
        cfg = self.config
        mask = skill_mask(entry.skill)
        selection = AgentSelection(frozenset(entry.agents))
        if not selection and not known:
            params, curve = train_baseline(cfg.sac, cfg.arena, entry_seed, cfg.training.steps, action_mask=mask)
            report = {"agents": [], "known": [], "env_steps": cfg.training.steps,
                      "episodes": len(curve), "against_known": {}}
            if cfg.evaluation.eval_episodes > 0:
                report["evaluation"] = evaluate_policy(
                    params, cfg.arena, cfg.evaluation.eval_episodes, entry_seed
                ).summary()
            return params, report
        return train_diverse_policy(
            known, selection, cfg.penalty, cfg.sac, cfg.arena, entry_seed, cfg.training.steps,
            eval_episodes=cfg.evaluation.eval_episodes,
            chunk_size=cfg.evaluation.chunk_size,
            action_mask=mask,
        )

    def run(self):
        """
        Execute the schedule.

        Returns:
            list[KnownPolicy]: All N policies in schedule order
        """
        existing = self.registry.list_policies() if self.registry is not None else {}
        validate_schedule(self.schedule, existing, self.config.penalty)

        produced = {}
        all_policies = []
        for index, entry in enumerate(self.schedule.entries):
            policy_id = entry.policy_id(index)
            entry_seed = entry.seed if entry.seed is not None else self.seed + index
            digest = entry_hash(self.config, entry, entry_seed)

            if self.registry is not None and self.registry.has_policy(policy_id, digest):
                logger.info(kv(event="entry_skipped", policy_id=policy_id, config_hash=digest))
                self.skipped.append(policy_id)
                policy = self.registry.query(policy_id)
            else:
                known = [self._resolve(k, produced) for k in entry.known]
                logger.info(kv(event="entry_started", policy_id=policy_id, agents=list(entry.agents),
                               known=list(entry.known), seed=entry_seed))
                params, report = self._train_entry(index, entry, known, entry_seed)
                demos = collect_demonstrations(
                    params, self.config.arena, self.config.evaluation.demo_episodes,
                    derive_seed(entry_seed, "demos"),
                )
                policy = KnownPolicy(policy_id=policy_id, params=params, demonstrations=demos, report=report)
                if self.registry is not None:
                    self.registry.register_policy(
                        policy,
                        metadata={
                            "seed": entry_seed,
                            "schedule_entry": entry.model_dump(mode="json"),
                            "config_hash": digest,
                            "env_steps": self.config.training.steps,
                        },
                    )
            produced[policy_id] = policy
            all_policies.append(policy)
        return all_policies


def run_mmpd(schedule, config, seed, registry=None):
    """Run every entry of `schedule`; resumes from `registry` when given."""
    if not isinstance(schedule, DiversitySchedule):
        schedule = DiversitySchedule(entries=tuple(schedule))
    return MmpdWorkflow(schedule, config, seed, registry).run()
