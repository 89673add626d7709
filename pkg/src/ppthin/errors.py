"""Exception taxonomy shared across the package.

ValidationError covers malformed inputs (bad arguments, files, configs) and maps
to CLI exit code 1; ModelError covers failures that arise while a structurally
valid simulation runs (e.g. an exploding adaptive bound) and maps to exit code 2.
"""

from __future__ import annotations


class ValidationError(ValueError):
    """Input violates a documented precondition or file/config format."""


class ConfigError(ValidationError):
    """Run configuration file or CLI flag set cannot be parsed."""


class MarkBoundError(ValidationError):
    """A window's mark bound does not dominate the intensity it must thin."""


class JumpCountMismatchError(ValidationError):
    """Paths compared under the time-change distance have unequal jump counts."""


class CoincidentJumpTimesError(ValidationError):
    """Distinct components of a path vector share a jump time."""


class DegenerateFitError(ValidationError):
    """Rate regression input contains a zero error row or too few rows."""


class ModelError(RuntimeError):
    """A simulation failed at runtime despite valid inputs."""


class BoundOverflowError(ModelError):
    """Adaptive thinning bound exceeded the configured ceiling."""
