"""Exception types shared across the toolkit."""


class ContrakitError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(ContrakitError):
    """Matrix or vector has the wrong shape for the requested operation."""


class ParameterError(ContrakitError):
    """A numeric parameter is outside its admissible range."""


class InvalidWeightError(ContrakitError):
    """Weight matrix is singular or too ill-conditioned to define a norm."""


class NumericError(ContrakitError):
    """An iterative numeric routine failed to converge or find a bracket."""


class RegionError(ContrakitError):
    """A state-space region is empty or not contained in the model domain."""


class QueryError(ContrakitError):
    """A property query is malformed or incompatible with the model."""


class StiffnessError(ContrakitError):
    """Integrator step size underflowed; carries the last reached state."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class SchemaError(ContrakitError):
    """Input file does not match its schema; carries a location string."""

    def __init__(self, message, location=""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location
