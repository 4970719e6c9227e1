"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NoSphereError(DomainError):
    """Requested a constant-curvature sphere below the existence threshold."""

    def __init__(self, k, k0):
        super().__init__(
            f"no rotationally invariant sphere for K={k!r}: existence requires K >= K0={k0!r}"
        )
        self.k = k
        self.k0 = k0


class SingularityError(RuntimeError):
    """A singular factor of the profile ODE was hit.

    ``factor`` names the offending quantity; ``partial`` carries whatever
    trajectory was computed before the failure (may be None).
    """

    def __init__(self, factor, message=None, partial=None):
        super().__init__(message or f"singular factor: {factor}")
        self.factor = factor
        self.partial = partial


class CriticalPointError(RuntimeError):
    """Level-curve tracing ran into a vanishing gradient.

    ``partial`` holds the curve traced up to the failure point.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class AccuracyError(RuntimeError):
    """A quadrature or refinement loop failed to meet its error target.

    ``achieved`` is the best value obtained, ``error`` its estimated error.
    """

    def __init__(self, message, achieved=None, error=None):
        super().__init__(message)
        self.achieved = achieved
        self.error = error


class BracketError(ValueError):
    """Root bracketing failed: no sign change over the given interval."""


class EmbeddednessBoundaryError(RuntimeError):
    """The vertical radius is within the declared band of pi.

    The embedded/not-embedded verdict is indeterminate at the stated
    accuracy; ``h`` carries the computed vertical radius.
    """

    def __init__(self, h, band):
        super().__init__(
            f"vertical radius h={h!r} lies within {band!r} of pi: "
            "embeddedness verdict is on the boundary"
        )
        self.h = h
        self.band = band
