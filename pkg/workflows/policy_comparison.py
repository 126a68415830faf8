"""
Policy Comparison Workflow
Fréchet distance between paired trajectories plus MMD over agreement features
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from arena.world import NUM_AGENTS
from learner.training import run_episode
from metrics.frechet import frechet_distance
from utils.errors import UsageError
from utils.logging_setup import kv
from utils.seeding import episode_seeds
from workflows.diversity import disagreement_rates, mmd_against

logger = logging.getLogger(__name__)

COMPARE_FORMAT_VERSION = 1
CSV_COLUMNS = ["policy_a", "policy_b", "agent", "frechet_mean", "frechet_std",
               "episodes", "mmd", "sigma", "disagreement_rate"]


@dataclass
class ComparisonReport:
    policy_a: str
    policy_b: str
    episodes: int
    seed: int
    frechet_per_episode: dict
    mmd: dict
    disagreement_rate: float
    disagreement_per_agent: dict = field(default_factory=dict)

    @property
    def frechet_mean(self):
        return {agent: float(np.mean(values)) for agent, values in self.frechet_per_episode.items()}

    def to_dict(self):
        return {
            "format_version": COMPARE_FORMAT_VERSION,
            "policy_a": self.policy_a,
            "policy_b": self.policy_b,
            "episodes": self.episodes,
            "seed": self.seed,
            "frechet_mean": {str(k): v for k, v in self.frechet_mean.items()},
            "frechet_per_episode": {str(k): list(v) for k, v in self.frechet_per_episode.items()},
            "mmd": self.mmd,
            "disagreement_rate": self.disagreement_rate,
            "disagreement_per_agent": {str(k): v for k, v in self.disagreement_per_agent.items()},
        }

    def to_frame(self):
        """One flat row per (policy pair, agent)."""
        rows = []
        for agent, values in sorted(self.frechet_per_episode.items()):
            rows.append(
                {
                    "policy_a": self.policy_a,
                    "policy_b": self.policy_b,
                    "agent": agent,
                    "frechet_mean": float(np.mean(values)),
                    "frechet_std": float(np.std(values)),
                    "episodes": self.episodes,
                    "mmd": self.mmd["mmd"],
                    "sigma": self.mmd["sigma"],
                    "disagreement_rate": self.disagreement_per_agent.get(agent, self.disagreement_rate),
                }
            )
        return pd.DataFrame(rows, columns=CSV_COLUMNS)


class PolicyComparisonWorkflow:
    """
    Compare two known policies:
    1. Roll both out greedily from identical reset seeds
    2. Fréchet distance per agent between paired trajectories
    3. MMD and greedy disagreement on policy a's demonstration chunks
    """

    def __init__(self, a, b, arena, episodes, seed, chunk_size=32):
        self.a = a
        self.b = b
        self.arena = arena
        self.episodes = episodes
        self.seed = seed
        self.chunk_size = chunk_size

    def run(self):
        if self.episodes < 1:
            raise UsageError(f"Comparison needs at least one episode, got {self.episodes}")
        frechet = {agent: [] for agent in range(NUM_AGENTS)}
        for ep_seed in episode_seeds(self.seed, self.episodes, tag="compare"):
            log_a = run_episode(self.a.params, self.arena, ep_seed, record=True).log
            log_b = run_episode(self.b.params, self.arena, ep_seed, record=True).log
            for agent in range(NUM_AGENTS):
                frechet[agent].append(frechet_distance(log_a.agent_path(agent), log_b.agent_path(agent)))

        mmd_report = mmd_against(self.b.params, self.a, self.chunk_size)
        per_agent = disagreement_rates(self.b.params, self.a, range(NUM_AGENTS))
        report = ComparisonReport(
            policy_a=self.a.policy_id,
            policy_b=self.b.policy_id,
            episodes=self.episodes,
            seed=self.seed,
            frechet_per_episode=frechet,
            mmd=mmd_report.to_dict(),
            disagreement_rate=float(np.mean(list(per_agent.values()))),
            disagreement_per_agent=per_agent,
        )
        logger.info(kv(event="comparison", a=self.a.policy_id, b=self.b.policy_id,
                       mmd=mmd_report.mmd,
                       **{f"frechet_agent{k}": v for k, v in report.frechet_mean.items()}))
        return report


def compare_policies(a, b, arena, episodes, seed, chunk_size=32):
    return PolicyComparisonWorkflow(a, b, arena, episodes, seed, chunk_size).run()


def write_comparison(report, directory):
    """Write compare/<a>__<b>.json and .csv; returns the two paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = f"{report.policy_a}__{report.policy_b}"
    json_path = directory / f"{stem}.json"
    csv_path = directory / f"{stem}.csv"
    json_path.write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
    frame = report.to_frame()
    frame.insert(0, "format_version", COMPARE_FORMAT_VERSION)
    frame.to_csv(csv_path, index=False, float_format="%.17g")
    return json_path, csv_path


def summarize_comparisons(csv_paths):
    """
    Mean and std of Fréchet/MMD per (pair, agent) across runs, e.g. five seeds
    of the same experiment in separate registries.
    """
    frames = [pd.read_csv(path) for path in csv_paths]
    if not frames:
        return pd.DataFrame(columns=["policy_a", "policy_b", "agent", "runs",
                                     "frechet_mean", "frechet_std", "mmd_mean", "disagreement_mean"])
    data = pd.concat(frames, ignore_index=True)
    grouped = data.groupby(["policy_a", "policy_b", "agent"], sort=True)
    summary = grouped.agg(
        runs=("frechet_mean", "size"),
        frechet_mean=("frechet_mean", "mean"),
        frechet_std=("frechet_mean", "std"),
        mmd_mean=("mmd", "mean"),
        disagreement_mean=("disagreement_rate", "mean"),
    ).reset_index()
    return summary
