"""
Checkpoint Store
Lossless JSON checkpoints of PolicyParams (<id>.ckpt.json)
"""

import json
import logging
from pathlib import Path

import numpy as np

from learner.mlp import Mlp
from learner.policy import AgentNetworks, PolicyParams, SacConfig
from utils.errors import ArtifactNotFoundError, ArtifactParseError, FormatVersionError, StoreError
from utils.logging_setup import kv

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1
SUPPORTED_CHECKPOINT_VERSIONS = (1,)


def _net_to_dict(net):
    # json writes floats with repr(), which round-trips float64 exactly
    return {
        "sizes": list(net.sizes),
        "weights": [w.ravel(order="C").tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }


def _net_from_dict(data):
    sizes = tuple(int(s) for s in data["sizes"])
    weights = [
        np.asarray(flat, dtype=np.float64).reshape((fan_in, fan_out), order="C")
        for flat, fan_in, fan_out in zip(data["weights"], sizes[:-1], sizes[1:])
    ]
    biases = [np.asarray(b, dtype=np.float64) for b in data["biases"]]
    return Mlp(sizes=sizes, weights=weights, biases=biases)


def checkpoint_payload(params):
    return {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "alpha": params.alpha,
        "action_mask": list(params.action_mask),
        "config": params.sac.model_dump(mode="json"),
        "agents": [
            {name: _net_to_dict(net) for name, net in agent.networks().items()}
            for agent in params.agents
        ],
    }


def save_checkpoint(params, path):
    """
    Write params to `path` atomically (temp file, then rename).

    Args:
        params (PolicyParams): Joint policy
        path (str | Path): Destination, conventionally <policy-id>.ckpt.json
    """
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_text(json.dumps(checkpoint_payload(params)), encoding="utf-8")
        tmp.replace(path)
    except OSError as e:
        raise StoreError(f"Failed to write checkpoint '{path}': {e}") from e
    logger.debug(kv(event="checkpoint_saved", path=path))


def load_checkpoint(path):
    """
    Read a checkpoint written by `save_checkpoint`.

    Raises:
        ArtifactNotFoundError: Missing file
        ArtifactParseError: Truncated or malformed JSON (with byte offset)
        FormatVersionError: Unsupported format_version; nothing is loaded
    """
    path = Path(path)
    if not path.exists():
        raise ArtifactNotFoundError(f"No such checkpoint: '{path}'")
    raw = path.read_bytes()
    text = raw.decode("utf-8", errors="replace")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ArtifactParseError(path, len(text[: e.pos].encode("utf-8")), e.msg) from e

    version = data.get("format_version") if isinstance(data, dict) else None
    if version not in SUPPORTED_CHECKPOINT_VERSIONS:
        raise FormatVersionError(path, version, list(SUPPORTED_CHECKPOINT_VERSIONS))

    try:
        agents = [
            AgentNetworks(**{name: _net_from_dict(net) for name, net in agent.items()})
            for agent in data["agents"]
        ]
        return PolicyParams(
            agents=agents,
            alpha=float(data["alpha"]),
            sac=SacConfig.model_validate(data["config"]),
            action_mask=tuple(bool(m) for m in data["action_mask"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactParseError(path, len(raw), f"invalid checkpoint structure: {e}") from e
