"""
Error Types
Exception hierarchy shared by the arena, learner, workflows and stores
"""


class MmpdError(Exception):
    """Base class for every error raised by this package"""


class ConfigurationError(MmpdError, ValueError):
    """
    Invalid configuration, schedule or policy reference.

    Args:
        message (str): Summary line
        violations (list): Every individual violation found
    """

    def __init__(self, message, violations=None):
        self.violations = list(violations or [])
        if self.violations:
            message = message + "\n" + "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(message)


class UsageError(MmpdError, ValueError):
    """API misuse: shape mismatch, empty input, stepping a finished episode"""


class TrainingError(MmpdError, RuntimeError):
    """Non-finite loss or gradient during an update"""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = dict(diagnostics or {})
        if self.diagnostics:
            details = ", ".join(f"{k}={v}" for k, v in sorted(self.diagnostics.items()))
            message = f"{message} ({details})"
        super().__init__(message)


class StoreError(MmpdError):
    """Base class for persistence failures"""


class ArtifactNotFoundError(StoreError, FileNotFoundError):
    pass


class ArtifactParseError(StoreError):
    def __init__(self, path, offset, reason):
        self.path = str(path)
        self.offset = offset
        super().__init__(f"Failed to parse '{self.path}' at byte offset {offset}: {reason}")


class FormatVersionError(StoreError):
    def __init__(self, path, found, supported):
        self.path = str(path)
        self.found = found
        self.supported = supported
        super().__init__(
            f"Unsupported format_version {found!r} in '{self.path}' (supported: {supported})"
        )


class RegistryError(StoreError):
    """Registry index inconsistent with the files on disk"""
