"""Error types mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid or incomplete configuration (exit code 2)."""


class DataError(RuntimeError):
    """Unreadable or inconsistent data files (exit code 3)."""


class StageError(DataError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
