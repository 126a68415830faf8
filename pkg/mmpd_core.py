"""
Policy Registry Core
Unified on-disk index of known joint-policies (checkpoint, demonstrations, report)
"""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path

from stores.checkpoint_store import load_checkpoint, save_checkpoint
from stores.trajectory_store import read_demonstrations, write_demonstrations
from utils.errors import ArtifactParseError, FormatVersionError, RegistryError, StoreError
from utils.logging_setup import kv
from workflows.diversity import DemonstrationBuffer, KnownPolicy

logger = logging.getLogger(__name__)

REGISTRY_FORMAT_VERSION = 1
REPORT_FORMAT_VERSION = 1


def _atomic_write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    tmp.replace(path)


class PolicyRegistry:
    """
    Registry of trained policies in one experiment directory.

    Files per policy: <id>.ckpt.json, <id>.demos.jsonl, <id>.report.json;
    evaluation logs go to <id>.traj.jsonl. registry.json is rewritten
    atomically after a policy's files are in place, so a crashed run never
    leaves a half-indexed policy.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.policy_metadata = {}
        self._load_index()

    @property
    def index_path(self):
        return self.root / "registry.json"

    def checkpoint_path(self, policy_id):
        return self.root / f"{policy_id}.ckpt.json"

    def demonstrations_path(self, policy_id):
        return self.root / f"{policy_id}.demos.jsonl"

    def report_path(self, policy_id):
        return self.root / f"{policy_id}.report.json"

    def trajectory_path(self, policy_id):
        return self.root / f"{policy_id}.traj.jsonl"

    def compare_dir(self):
        return self.root / "compare"

    def _load_index(self):
        if not self.index_path.exists():
            return
        text = self.index_path.read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ArtifactParseError(self.index_path, len(text[: e.pos].encode("utf-8")), e.msg) from e
        if data.get("format_version") != REGISTRY_FORMAT_VERSION:
            raise FormatVersionError(self.index_path, data.get("format_version"), [REGISTRY_FORMAT_VERSION])
        self.policy_metadata = dict(data.get("policies", {}))

    def _write_index(self):
        _atomic_write_json(
            self.index_path,
            {"format_version": REGISTRY_FORMAT_VERSION, "policies": self.policy_metadata},
        )

    def register_policy(self, known, metadata=None):
        """
        Persist a KnownPolicy and index it under its id.

        Args:
            known (KnownPolicy): Params, demonstrations and report
            metadata (dict): seed, schedule entry, config hash, env steps...
        """
        policy_id = known.policy_id
        save_checkpoint(known.params, self.checkpoint_path(policy_id))
        write_demonstrations(known.demonstrations.episodes, self.demonstrations_path(policy_id))
        _atomic_write_json(
            self.report_path(policy_id),
            {"format_version": REPORT_FORMAT_VERSION, "report": known.report},
        )
        self.policy_metadata[policy_id] = {
            "checkpoint": self.checkpoint_path(policy_id).name,
            "demonstrations": self.demonstrations_path(policy_id).name,
            "report": self.report_path(policy_id).name,
            "demo_seed": known.demonstrations.seed,
            "demo_episodes": known.demonstrations.episode_count,
            "created_at": datetime.now(timezone.utc).isoformat(),
            **(metadata or {}),
        }
        self._write_index()
        logger.info(kv(event="policy_registered", policy_id=policy_id, root=self.root))

    def query(self, policy_id):
        """
        Load a registered policy.

        Raises:
            RegistryError: If the id is not registered
        """
        if policy_id not in self.policy_metadata:
            raise RegistryError(
                f"No policy registered as '{policy_id}'. Available policies: {sorted(self.policy_metadata)}"
            )
        params = load_checkpoint(self.checkpoint_path(policy_id))
        meta = self.policy_metadata[policy_id]
        demos = DemonstrationBuffer(
            episodes=read_demonstrations(self.demonstrations_path(policy_id)),
            seed=int(meta.get("demo_seed", 0)),
        )
        report = {}
        if self.report_path(policy_id).exists():
            report = json.loads(self.report_path(policy_id).read_text(encoding="utf-8")).get("report", {})
        return KnownPolicy(policy_id=policy_id, params=params, demonstrations=demos, report=report)

    def has_policy(self, policy_id, config_hash=None):
        meta = self.policy_metadata.get(policy_id)
        if meta is None:
            return False
        return config_hash is None or meta.get("config_hash") == config_hash

    def get_registered_policies(self):
        """Return list of all registered policy ids with metadata"""
        return [{"policy_id": pid, **meta} for pid, meta in sorted(self.policy_metadata.items())]

    def list_policies(self):
        return dict(self.policy_metadata)

    def unregister_policy(self, policy_id):
        """Remove a policy from the index (its files stay on disk)"""
        if policy_id in self.policy_metadata:
            del self.policy_metadata[policy_id]
            self._write_index()
            return True
        return False

    def get_policy_status(self, policy_id):
        return self.policy_metadata.get(policy_id)

    def verify(self):
        """
        Check that every indexed file exists and its checkpoint parses.

        Returns:
            list: Problems found (empty when consistent)
        """
        problems = []
        for policy_id, meta in sorted(self.policy_metadata.items()):
            for key in ("checkpoint", "demonstrations", "report"):
                if not (self.root / meta[key]).exists():
                    problems.append(f"{policy_id}: missing {key} file {meta[key]}")
            if self.checkpoint_path(policy_id).exists():
                try:
                    load_checkpoint(self.checkpoint_path(policy_id))
                except StoreError as e:
                    problems.append(f"{policy_id}: {e}")
        return problems
