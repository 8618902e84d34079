"""Exception types shared across the package."""


class SceneryFlowError(Exception):
    """Base class for all package-specific errors."""


class ConditionOnNull(SceneryFlowError):
    """Conditioning or restriction on a set of zero mass."""


class ResolutionExceeded(SceneryFlowError):
    """An operation would require detail below the stored leaf resolution."""


class ShapeError(SceneryFlowError):
    """Incompatible dimensions, depths or supports."""


class SolverError(SceneryFlowError):
    """The LP solver failed to return an optimal solution."""


class OracleTooLarge(SceneryFlowError):
    """Brute-force oracle invoked on an instance beyond its size cap."""


class EmptyOutput(SceneryFlowError):
    """A Monte Carlo construction rejected every sample."""
