"""Exception hierarchy shared by all fejerlab modules."""


class FejerlabError(Exception):
    """Base class for library errors."""


class InvalidPointError(FejerlabError, ValueError):
    """A point lies outside the chart domain of its group."""


class ParamError(FejerlabError, ValueError):
    """A kernel parameter is not admissible for its family."""


class ConfigurationError(FejerlabError, ValueError):
    """Inconsistent problem setup (mismatched groups, missing cells, bad tokens)."""


class PartitionError(FejerlabError, ValueError):
    """A partition failed structural validation."""


class QuadratureError(FejerlabError, ArithmeticError):
    """Quadrature did not reach the requested tolerance.

    Attributes
    ----------
    value : float
        Best available value.
    estimate : float
        A-posteriori error estimate at the last refinement level.
    """

    def __init__(self, message, value=float("nan"), estimate=float("inf")):
        super().__init__(message)
        self.value = value
        self.estimate = estimate
