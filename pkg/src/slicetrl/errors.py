"""Exception hierarchy shared across the package."""


class SliceTrlError(Exception):
    """Base class for all package errors."""


class ConfigError(SliceTrlError):
    """Invalid or unknown configuration field. Carries the field name."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


class ContractViolation(SliceTrlError, ValueError):
    """A caller broke an operation precondition (bad action, shape, ...)."""


class StoreError(SliceTrlError):
    """Knowledge-store failure (I/O, locking)."""


class DuplicateTaskError(StoreError):
    """An artifact with the same task id already exists."""


class IntegrityError(StoreError):
    """Stored artifact failed its checksum on load."""


class MissingExpertError(StoreError):
    """No compatible expert found for a transfer run."""
