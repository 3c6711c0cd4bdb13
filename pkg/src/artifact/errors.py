"""Exception types shared across the package.

Solver-side soft failures (leaving the chart, step underflow, loss of the
unit-speed admissibility band) are NOT exceptions: integration returns a
partial trajectory carrying a status flag instead.  The classes here are for
hard contract violations where no partial result makes sense.
"""


class ArtifactError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(ArtifactError):
    """Input has the wrong chart dimension for the requested operation."""


class DomainError(ArtifactError):
    """Position x lies outside the metric's chart domain."""


class DegenerateTangent(ArtifactError):
    """Tangent vector shorter than the configured floor; F is not smooth there."""


class NotPositiveDefinite(ArtifactError):
    """Fundamental tensor failed its Cholesky factorization."""


class DegenerateFlag(ArtifactError):
    """Flag edge vector is g-parallel to y; no 2-plane to measure."""


class DegenerateHint(ArtifactError):
    """A frame hint vector is linearly dependent on the vectors built so far."""


class InvalidParams(ArtifactError):
    """Metric or profile parameters outside their documented range."""


class IntervalExhausted(ArtifactError):
    """Closed-form curve family left its interval of validity.

    Carries .s_max, the largest parameter value still inside.
    """

    def __init__(self, message, s_max=None):
        super().__init__(message)
        self.s_max = s_max


class ReconstructionFailure(ArtifactError):
    """Velocity reconstruction hit a sample with no real solution.

    Carries .s and .state describing the offending sample.
    """

    def __init__(self, message, s=None, state=None):
        super().__init__(message)
        self.s = s
        self.state = state


class InsufficientSamples(ArtifactError):
    """Quadrature or differencing asked of a trajectory with too few points."""


class ConfigError(ArtifactError):
    """Malformed run configuration (CLI or file)."""


class IntegrationError(ArtifactError):
    """A run ended before its requested span or a generator gave up.

    Carries .record, a flat dict suitable for a machine-readable
    failure file.
    """

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = dict(record or {})
