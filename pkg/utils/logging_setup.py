"""
Logging Setup
Configures key=value structured logging from the MMPD_LOG environment variable
"""

import hashlib
import json
import logging
import os
import subprocess
from pathlib import Path

LOG_FORMAT = "%(asctime)s level=%(levelname)s logger=%(name)s %(message)s"

_PACKAGE_ROOT = Path(__file__).resolve().parent.parent
_SOURCE_DIRS = ("arena", "learner", "metrics", "stores", "utils", "workflows")


def configure_logging(level=None):
    """
    Configure the root logger once.

    Args:
        level (str): Explicit level; falls back to $MMPD_LOG, then INFO

    Returns:
        int: The numeric level in effect
    """
    name = (level or os.getenv("MMPD_LOG", "INFO")).upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        numeric = logging.INFO
    logging.basicConfig(level=numeric, format=LOG_FORMAT, force=True)
    return numeric


def kv(**fields):
    """Render fields as a stable key=value string for log messages."""
    parts = []
    for key, value in fields.items():
        if isinstance(value, float):
            value = f"{value:.6g}"
        parts.append(f"{key}={value}")
    return " ".join(parts)


def progress_enabled():
    return logging.getLogger().getEffectiveLevel() <= logging.INFO


def config_hash(payload):
    """First 12 hex digits of sha256 over canonical JSON."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def build_id():
    """Git commit when available, otherwise a digest of the package sources."""
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short=12", "HEAD"],
            cwd=_PACKAGE_ROOT,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass

    digest = hashlib.sha256()
    files = sorted(_PACKAGE_ROOT.glob("*.py"))
    for directory in _SOURCE_DIRS:
        files.extend(sorted((_PACKAGE_ROOT / directory).glob("*.py")))
    for path in files:
        digest.update(path.name.encode("utf-8"))
        digest.update(path.read_bytes())
    return "src-" + digest.hexdigest()[:12]
