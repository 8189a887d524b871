"""Exception types shared across the package."""


class ObstacleError(ValueError):
    """Base class for all package errors."""


class NonPositiveWidth(ObstacleError):
    def __init__(self, index: int, which: str, value=None):
        self.index = index
        self.which = which
        self.value = value
        msg = f"obstacle {index}: width {which} must be strictly positive"
        if value is not None:
            msg += f" (got {value})"
        super().__init__(msg)


class EmptyLandscape(ObstacleError):
    def __init__(self, msg: str = "landscape has no obstacles"):
        super().__init__(msg)


class IndexRange(ObstacleError):
    pass


class MismatchedLength(ObstacleError):
    pass


class InfeasibleStep(ObstacleError):
    """The per-obstacle step domain is empty for the requested exponents."""


class DomainViolation(ObstacleError):
    def __init__(self, constraint: str, index: int | None = None):
        self.constraint = constraint
        self.index = index
        where = f" at m={index}" if index is not None else ""
        super().__init__(f"allocation violates the {constraint} constraint{where}")


class NoFeasiblePoint(ObstacleError):
    pass


class ProbeOutOfRange(ObstacleError):
    pass
