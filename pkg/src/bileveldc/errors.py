"""Exception hierarchy shared across the package."""


class BilevelDCError(Exception):
    """Base class for all solver errors raised by this package."""


class NumericalDegeneracyError(BilevelDCError):
    """A pivot or factorization fell below the numerical tolerance."""


class NotSPDError(BilevelDCError):
    """Quadratic form is not symmetric positive definite."""


class InfeasiblePolyhedronError(BilevelDCError):
    """An operation that requires a nonempty polyhedron got an empty one."""


class LowerLevelInfeasibleError(BilevelDCError):
    """The lower-level problem has no feasible point at the given parameter."""


class LowerLevelUnboundedError(BilevelDCError):
    """The lower-level problem is unbounded below; the model assumptions fail."""


class DomainError(BilevelDCError):
    """Evaluation requested outside the domain of the value function."""


class InfeasiblePointError(BilevelDCError):
    """A point violates the constraints it was required to satisfy."""


class InfeasibleStartError(BilevelDCError):
    """A starting point is not feasible for the coupled polyhedron."""


class DualInfeasibleError(BilevelDCError):
    """The lower-level dual polyhedron is empty."""


class InfeasibleComplementarityError(BilevelDCError):
    """Values violate complementarity feasibility within tolerance."""


class ParseError(BilevelDCError):
    """An instance file is malformed; the message names the offending field."""


class InfeasibleInstanceError(BilevelDCError):
    """The coupled constraint polyhedron of an instance is empty."""


class EmptyTableError(BilevelDCError):
    """A benchmark table with no rows was passed where rows are required."""
