"""Exception types shared across the engine."""

from __future__ import annotations


class SdpError(Exception):
    """Base class for engine errors."""


class ConfigurationError(SdpError):
    """A catalog, constraint set, model, or scenario set is malformed
    or internally inconsistent (unknown ids, missing coefficients, ...)."""


class InfeasibleError(SdpError):
    """The constrained weight region is empty.

    ``conflicts`` names a mutually inconsistent subset of constraint ids
    found by a greedy deletion filter (diagnostic, not certified minimal).
    """

    def __init__(self, message: str, conflicts: list[str] | None = None):
        super().__init__(message)
        self.conflicts: list[str] = list(conflicts or [])

    def as_dict(self) -> dict:
        return {"error": "infeasible", "message": str(self), "conflicts": self.conflicts}
