"""Exception types raised across the package."""


class GaussZerosError(Exception):
    """Base class for all package errors."""


class DegenerateMeasureError(GaussZerosError, ValueError):
    """Measure has zero mass or zero second moment."""


class UnknownStructureError(GaussZerosError, ValueError):
    """The structural question cannot be decided for this measure variant."""


class QuadratureError(GaussZerosError, RuntimeError):
    """Quadrature did not converge; ``trace`` holds the successive estimates."""

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class ToleranceError(GaussZerosError, RuntimeError):
    """A requested accuracy cannot be reached."""


class EmbeddingError(GaussZerosError, RuntimeError):
    """Circulant embedding lost too much spectral mass to clipping."""


class SimulationError(GaussZerosError, RuntimeError):
    """A Monte Carlo replication failed; ``index`` is the replication number."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConfigError(GaussZerosError, ValueError):
    """Invalid experiment configuration; ``fields`` lists offending keys."""

    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = list(fields)
