"""
Trajectory & Demonstration Store
JSON-Lines files of episode logs (<id>.traj.jsonl) and demonstrations (<id>.demos.jsonl)
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from learner.replay import Transition
from utils.errors import ArtifactNotFoundError, ArtifactParseError, FormatVersionError, StoreError

logger = logging.getLogger(__name__)

TRAJECTORY_FORMAT_VERSION = 1
DEMONSTRATION_FORMAT_VERSION = 1


@dataclass
class TickRecord:
    tick: int
    positions: list
    actions: list
    white_hp: list
    red_heading_deg: float
    red_hp: int
    reward: float
    events: list = field(default_factory=list)


@dataclass
class TrajectoryLog:
    """One episode: reset seed, spawn positions, one record per tick, final outcome."""

    seed: int
    start_positions: list
    records: list = field(default_factory=list)
    outcome: str = "ongoing"

    def agent_path(self, agent):
        """(x, y) polyline of one white cube including its spawn point."""
        return [tuple(self.start_positions[agent])] + [tuple(r.positions[agent]) for r in self.records]

    def attack_events(self):
        """(tick, event) for every successful white attack."""
        return [
            (r.tick, e) for r in self.records for e in r.events if e["shooter"].startswith("white_")
        ]

    def to_dict(self):
        return {
            "format_version": TRAJECTORY_FORMAT_VERSION,
            "seed": self.seed,
            "start_positions": [list(p) for p in self.start_positions],
            "outcome": self.outcome,
            "records": [vars(r) for r in self.records],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            seed=int(data["seed"]),
            start_positions=[list(p) for p in data["start_positions"]],
            records=[TickRecord(**r) for r in data["records"]],
            outcome=data["outcome"],
        )


@dataclass
class DemonstrationEpisode:
    seed: int
    outcome: str
    transitions: list


def _transition_to_dict(t):
    return {
        "state": [float(x) for x in t.state],
        "actions": [int(a) for a in t.actions],
        "reward": float(t.reward),
        "next_state": [float(x) for x in t.next_state],
        "done": bool(t.done),
    }


def _transition_from_dict(d):
    return Transition(
        state=np.asarray(d["state"], dtype=np.float64),
        actions=tuple(int(a) for a in d["actions"]),
        reward=float(d["reward"]),
        next_state=np.asarray(d["next_state"], dtype=np.float64),
        done=bool(d["done"]),
    )


def _append_lines(path, payloads):
    path = Path(path)
    if not payloads:
        return
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", encoding="utf-8") as handle:
            for payload in payloads:
                handle.write(json.dumps(payload, separators=(",", ":")) + "\n")
    except OSError as e:
        raise StoreError(f"Failed to append to '{path}': {e}") from e


def _read_lines(path, supported_version):
    path = Path(path)
    if not path.exists():
        raise ArtifactNotFoundError(f"No such file: '{path}'")
    offset = 0
    rows = []
    with path.open("rb") as handle:
        for raw in handle:
            line = raw.decode("utf-8")
            if line.strip():
                try:
                    data = json.loads(line)
                except json.JSONDecodeError as e:
                    raise ArtifactParseError(path, offset + len(line[: e.pos].encode("utf-8")), e.msg) from e
                if data.get("format_version") != supported_version:
                    raise FormatVersionError(path, data.get("format_version"), [supported_version])
                rows.append(data)
            offset += len(raw)
    return rows


def append_trajectory(logs, path):
    """
    Append episodes to a JSON-Lines trajectory file, one line per episode.

    Args:
        logs (TrajectoryLog | list[TrajectoryLog]): Episodes to append; an empty list leaves the file untouched
        path (str | Path): Target file
    """
    if isinstance(logs, TrajectoryLog):
        logs = [logs]
    _append_lines(path, [log.to_dict() for log in logs])


def read_trajectories(path):
    return [TrajectoryLog.from_dict(row) for row in _read_lines(path, TRAJECTORY_FORMAT_VERSION)]


def write_demonstrations(episodes, path):
    """Replace `path` with the given demonstration episodes (write-then-rename)."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    if tmp.exists():
        tmp.unlink()
    _append_lines(
        tmp,
        [
            {
                "format_version": DEMONSTRATION_FORMAT_VERSION,
                "seed": ep.seed,
                "outcome": ep.outcome,
                "transitions": [_transition_to_dict(t) for t in ep.transitions],
            }
            for ep in episodes
        ],
    )
    tmp.replace(path)


def read_demonstrations(path):
    return [
        DemonstrationEpisode(
            seed=int(row["seed"]),
            outcome=row["outcome"],
            transitions=[_transition_from_dict(t) for t in row["transitions"]],
        )
        for row in _read_lines(path, DEMONSTRATION_FORMAT_VERSION)
    ]
