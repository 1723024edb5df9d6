"""Exception taxonomy shared by every module.

Callers are expected to branch on these: degeneracy signals trigger a
re-perturbation, coverage/resolution errors carry the hint needed to retry
at a feasible size, capacity errors mean the requested discretization is
too large to materialize.
"""


class InvalidInputError(ValueError):
    """Geometric datum violates its invariant beyond tolerance."""


class DomainError(ValueError):
    """Arguments outside the mathematical domain of the operation."""


class DegenerateCrossingError(RuntimeError):
    """Near-tangential or near-vertex configuration; caller should perturb."""


class CoverageError(RuntimeError):
    """Tessellation does not cover the requested disk."""

    def __init__(self, message, required_rings=None, covered_radius=None):
        super().__init__(message)
        self.required_rings = required_rings
        self.covered_radius = covered_radius


class ResolutionLimitError(RuntimeError):
    """A quantity failed to stabilize within the working horizon."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class CapacityError(RuntimeError):
    """Discretization would exceed a configured size cap."""


class UndersampledError(RuntimeError):
    """Too few sample points inside a ball for a meaningful average."""


class UndefinedValueError(RuntimeError):
    """Operation has no value on this input (e.g. empty ball at all radii)."""


class PreconditionError(ValueError):
    """A declared precondition failed; the message names the violation."""


class NonConvergenceError(RuntimeError):
    """Iterative solver hit its cap; carries the bracket reached so far."""

    def __init__(self, message, lower=None, upper=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper
