"""Exception types raised by the library."""


class TwoStageError(Exception):
    """Base class for all library errors."""


class DomainError(TwoStageError, ValueError):
    """Argument outside the domain of a special function."""


class InvalidDesign(TwoStageError, ValueError):
    pass


class DatasetError(TwoStageError, ValueError):
    """Raw data does not match the design or the selection rule."""


class LengthMismatch(DatasetError):
    pass


class NonFiniteValue(DatasetError):
    pass


class SelectionMismatch(DatasetError):
    pass


class DegenerateData(TwoStageError, ArithmeticError):
    """Data inconsistent with a continuous model (e.g. zero spread).

    ``replication`` carries the replication index when raised from the
    simulation engine.
    """

    def __init__(self, message, replication=None):
        if replication is not None:
            message = f"{message} (replication {replication})"
        super().__init__(message)
        self.replication = replication


class ToleranceNotMet(TwoStageError, ArithmeticError):
    pass


class InsufficientConditionalSample(TwoStageError):
    def __init__(self, arm, count, required):
        super().__init__(
            f"arm {arm} selected in {count} replications, need at least {required}"
        )
        self.arm = arm
        self.count = count


class EmptyGrid(TwoStageError, ValueError):
    pass
