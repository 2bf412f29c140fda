"""Exception types shared across the package."""

from __future__ import annotations


class SelfSimError(Exception):
    """Base class for all errors raised by selfsim."""


class ColorLengthMismatch(SelfSimError):
    pass


class UnmappedTile(SelfSimError):
    pass


class MalformedProgram(SelfSimError):
    pass


class TargetTooLarge(SelfSimError):
    pass


class ZoomTooSmall(SelfSimError):
    """Raised when a zoom factor cannot host the layout or the recognizer run.

    ``n_min`` carries the smallest feasible zoom when it could be computed.
    """

    def __init__(self, message: str, n_min: int | None = None):
        super().__init__(message)
        self.n_min = n_min


class RecognizerBudgetExceeded(SelfSimError):
    pass


class RecognizerRejected(SelfSimError):
    pass


class WindowTooSmall(SelfSimError):
    pass


class SampleBudgetTooSmall(SelfSimError):
    pass


class WorkPeriodTooShort(SelfSimError):
    def __init__(self, message: str, u_min: int):
        super().__init__(message)
        self.u_min = u_min


class ColonyTooSmall(SelfSimError):
    pass


class InvalidNeighborhood(SelfSimError):
    def __init__(self, position: int, time: int):
        super().__init__(f"invalid neighborhood at position {position}, time {time}")
        self.position = position
        self.time = time


class EvaluationOverflow(SelfSimError):
    pass


class LevelTooLarge(SelfSimError):
    pass
