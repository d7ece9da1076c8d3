"""Exception types shared across the toolkit.

All derive from ValueError so generic input validation can be caught
uniformly, while callers that care can distinguish failure classes.
"""


class PlanningError(ValueError):
    """Sequence planning cannot produce a feasible synchronized plan."""


class SynchronizationError(ValueError):
    """Acquired frames violate the common-excitation-phase requirement."""


class GeometryError(ValueError):
    """Sampling geometry falls outside the available field or volume."""


class ConditioningError(ValueError):
    """A least-squares design matrix is rank deficient or ill conditioned."""

    def __init__(self, message: str, condition_number: float = float("inf")):
        super().__init__(message)
        self.condition_number = condition_number


class DegenerateInputError(ValueError):
    """Input carries no usable signal (all zero, empty, or constant)."""


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name and prior artifacts."""

    def __init__(self, stage: str, cause: BaseException, artifacts=()):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.artifacts = list(artifacts)
