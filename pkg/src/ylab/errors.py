"""Exception hierarchy shared by every ylab module."""


class YlabError(Exception):
    """Base class for all library errors."""


class ConfigurationError(YlabError, ValueError):
    """Inputs are inconsistent (e.g. fields living on different grids)."""


class UnsupportedExponentError(YlabError, ValueError):
    pass


class RealnessError(YlabError, ValueError):
    """A multiplier would map real fields to complex ones."""


class DegenerateFrameError(YlabError, ValueError):
    pass


class BlockIndexError(YlabError, IndexError):
    pass


class OrderingError(YlabError, ValueError):
    pass


class InsufficientDataError(YlabError, ValueError):
    pass


class ResolutionError(YlabError, ValueError):
    pass


class DomainError(YlabError, ValueError):
    pass


class DataError(YlabError, ValueError):
    pass


class DegenerateFitError(YlabError, ValueError):
    pass


class SolverError(YlabError, RuntimeError):
    """Time integration failed; ``t`` is the simulation time of the failure."""

    def __init__(self, message: str, t: float | None = None, parameter: float | None = None):
        self.t = t
        self.parameter = parameter
        detail = message
        if t is not None:
            detail += f" (t={t:.6g})"
        if parameter is not None:
            detail += f" (sweep parameter={parameter:.6g})"
        super().__init__(detail)


class ValidationError(YlabError, ValueError):
    """Collects every problem found while validating a configuration."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
