"""Exception hierarchy."""


class DP3Error(Exception):
    """Base class for all package errors."""


class DomainError(DP3Error, ValueError):
    """Parameters outside the admissible family."""


class BranchPointError(DP3Error):
    """Evaluation requested too close to a branch point of the curve."""


class AmbiguousHint(DP3Error):
    """Both square roots are equidistant from the continuation hint."""


class EndSingularity(DP3Error):
    """Evaluation requested inside the truncation radius of an end."""


class GeometryError(DP3Error):
    """Loop or grid geometry cannot be built for these parameters."""


class NoConvergence(DP3Error):
    """A quadrature rule exhausted its refinement budget."""


class SheetJump(DP3Error):
    """Sheet tracking failed below the minimum continuation step."""


class NonPositive(DP3Error):
    """A quantity proven positive came out non-positive."""


class BracketFailure(DP3Error):
    """No sign change found while bracketing a root."""


class NoSignChange(DP3Error):
    """The outer period scan found no sign change."""

    def __init__(self, message, scanned=None):
        super().__init__(message)
        self.scanned = scanned


class ParameterError(DP3Error, ValueError):
    """Invalid grid or meshing parameter."""


class CycleResidual(DP3Error):
    """A grid cycle integral exceeded its tolerance."""


class WeldFailure(DP3Error):
    """Boundary vertices that should coincide do not."""
