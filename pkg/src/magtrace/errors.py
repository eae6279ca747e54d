"""Exception hierarchy shared across the package.

Each error family carries a distinct process exit code so the CLI can
signal validation problems, energy-range violations, resonances and
integrator failures separately.
"""


class MagtraceError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(MagtraceError):
    """Bad parameters or configuration, rejected before any computation."""

    exit_code = 2


class MixedSupportError(ValidationError):
    """A spectral window contains both the zero period and a nonzero one.

    The two asymptotic regimes are disjoint; callers must isolate one.
    """


class ChartError(ValidationError):
    """Phase-space state lies outside its coordinate chart's validity."""


class ManeLevelError(MagtraceError):
    """Requested energy at or above the Mane level of the hyperbolic flow."""

    exit_code = 3

    def __init__(self, E, boundary):
        super().__init__(
            f"energy E={E:.12g} is at or above the Mane level "
            f"sqrt(1/R^2+1)={boundary:.12g}; the prediction can't be "
            "extended analytically at this level and above it"
        )
        self.E = E
        self.boundary = boundary


class ResonanceError(MagtraceError):
    """Orbit data too close to a resonance for the requested formula."""

    exit_code = 4


class DegenerateOrbitError(ResonanceError):
    """det(I - P) below the resonance margin: nondegeneracy fails."""


class IntegratorError(MagtraceError):
    """ODE integration failed or conservation drift exceeded its budget."""

    exit_code = 5


class QuadratureError(MagtraceError):
    """A quadrature did not converge to the requested tolerance."""

    exit_code = 5
