"""
Experiment Config Store
Loads and validates config.json and schedule files before any training starts
"""

import json
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from arena.config import ArenaConfig
from learner.policy import SacConfig
from utils.errors import ArtifactNotFoundError, ConfigurationError
from workflows.diversity import PenaltyConfig
from workflows.mmpd import DiversitySchedule, ScheduleEntry, validate_schedule


class EvaluationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    eval_episodes: int = Field(100, ge=0)
    demo_episodes: int = Field(50, ge=1)
    chunk_size: int = Field(32, ge=1)
    compare_episodes: int = Field(5, ge=1)


class TrainingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    steps: int = Field(150_000, ge=0)


class ExperimentConfig(BaseModel):
    """Everything one experiment directory needs; every section defaults."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    arena: ArenaConfig = ArenaConfig()
    sac: SacConfig = SacConfig()
    penalty: PenaltyConfig = PenaltyConfig()
    evaluation: EvaluationConfig = EvaluationConfig()
    training: TrainingConfig = TrainingConfig()
    schedule: tuple[ScheduleEntry, ...] = ()

    def with_steps(self, steps):
        return self.model_copy(update={"training": TrainingConfig(steps=steps)})

    def with_episodes(self, episodes):
        evaluation = self.evaluation.model_copy(
            update={"eval_episodes": episodes, "compare_episodes": episodes}
        )
        return self.model_copy(update={"evaluation": evaluation})

    def diversity_schedule(self):
        return DiversitySchedule(entries=self.schedule)


def _format_errors(error):
    violations = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        violations.append(f"{location}: {item['msg']}")
    return violations


def _read_json(path):
    path = Path(path)
    if not path.exists():
        raise ArtifactNotFoundError(f"No such file: '{path}'")
    try:
        return json.loads(path.read_text(encoding="utf-8") or "{}")
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"'{path}' is not valid JSON", [f"byte {e.pos}: {e.msg}"]) from e


def parse_experiment_config(data, existing_ids=()):
    """
    Validate a config document: defaults filled, unknown keys rejected,
    every invariant checked, schedule references resolved.

    Raises:
        ConfigurationError: Aggregated list of every violation
    """
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError("Invalid experiment config", _format_errors(e)) from e
    if config.schedule:
        validate_schedule(config.diversity_schedule(), existing_ids, config.penalty)
    return config


def load_experiment_config(path=None, existing_ids=()):
    """Read `path` (or use full defaults when None)."""
    data = {} if path is None else _read_json(path)
    return parse_experiment_config(data, existing_ids)


def load_schedule(path, existing_ids=()):
    """
    Read a schedule file: a JSON list of {agents, known, id?, skill?, seed?}.

    Raises:
        ConfigurationError: Malformed entries or unknown policy references
    """
    data = _read_json(path)
    if isinstance(data, dict):
        data = data.get("entries", [])
    try:
        schedule = DiversitySchedule.model_validate({"entries": data})
    except ValidationError as e:
        raise ConfigurationError(f"Invalid schedule '{path}'", _format_errors(e)) from e
    validate_schedule(schedule, existing_ids)
    return schedule


def default_config_dict():
    return ExperimentConfig().model_dump(mode="json")
