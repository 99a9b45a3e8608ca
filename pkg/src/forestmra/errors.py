"""Exception hierarchy for graph validation, sampling and solver failures."""


class ForestMRAError(Exception):
    """Base class for all library errors."""


class NonPositiveRate(ForestMRAError):
    """An edge rate is zero or negative."""


class ReversibilityViolation(ForestMRAError):
    """Detailed balance fails for the given rates and measure."""


class Disconnected(ForestMRAError):
    """The support graph is not connected."""


class DimensionMismatch(ForestMRAError):
    """A vector or matrix has the wrong shape for the graph."""


class ConvergenceFailure(ForestMRAError):
    """An eigensolver or iterative routine did not converge."""


class NonPositiveParameter(ForestMRAError):
    """A killing or filter parameter that must be positive is not."""


class GraphTooLarge(ForestMRAError):
    """Brute-force enumeration requested beyond its size limit."""


class EdgeNotInGraph(ForestMRAError):
    """A forest edge has zero rate in the underlying graph."""


class EmptyKeptSet(ForestMRAError):
    """Coarsening requested with no kept vertices."""


class FullKeptSet(ForestMRAError):
    """Coarsening requested with every vertex kept (identity level)."""


class SingularBlock(ForestMRAError):
    """The dropped-block of the Laplacian is numerically singular."""


class NotConverged(ForestMRAError):
    """The truncated series hit its term limit before the tolerance."""


class SolverFailure(ForestMRAError):
    """A linear solve produced an invalid kernel."""


class DegreeTooLow(ForestMRAError):
    """Polynomial kernel approximation residual above threshold."""


class DegenerateGraph(ForestMRAError):
    """The graph is too small for the requested operation."""


class EmptyComplement(ForestMRAError):
    """A coarse level has no dropped vertices."""


class ShapeMismatch(ForestMRAError):
    """Pyramid coefficients do not match the level stack."""


class RadiusDisconnected(ForestMRAError):
    """Random geometric graph stayed disconnected after radius growth."""
