"""Exception hierarchy shared by every module.

The CLI maps any ``CloningError`` to a JSON ``{"error": name, "detail": text}``
object, so subclasses should carry a readable message.
"""


class CloningError(Exception):
    """Base class for all library errors."""


class ProblemError(CloningError, ValueError):
    """A problem file or constructor argument violates an invariant.

    ``invariant`` names the failing check (e.g. ``"unit_norm"``).
    """

    def __init__(self, invariant, detail):
        super().__init__(detail)
        self.invariant = invariant


class NotPSDError(CloningError):
    pass


class ZeroFailureRow(CloningError):
    def __init__(self, index):
        super().__init__(f"q[{index}] = 0: no failure branch for state {index}")
        self.index = index


class NotFeasible(CloningError):
    pass


class NumericalGramMismatch(CloningError):
    pass


class UnsupportedDimension(CloningError):
    pass


class GridTooLarge(CloningError):
    pass
