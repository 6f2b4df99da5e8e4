"""Exception types raised by the simulation library."""


class RCSError(Exception):
    """Base class for all library errors."""


class DomainError(RCSError, ValueError):
    """A velocity at or above the speed of light was supplied."""


class ConvergenceError(RCSError, ArithmeticError):
    pass


class ParamError(RCSError, ValueError):
    pass


class BaseMismatch(RCSError, ValueError):
    """A tangent vector does not lie in the tangent space of the given base point."""


class InjectivityError(RCSError):
    """Two points are at or beyond the injectivity radius; log and transport are undefined."""

    def __init__(self, msg, pair=None):
        super().__init__(msg)
        self.pair = pair


class AntipodalError(InjectivityError):
    pass


class ProjectionError(RCSError, ValueError):
    pass


class CollisionError(RCSError):
    """Raised when two particles come closer than the collision threshold."""

    def __init__(self, msg, pair=None, distance=None):
        super().__init__(msg)
        self.pair = pair
        self.distance = distance


class GridMismatch(RCSError, ValueError):
    pass


class DegenerateError(RCSError, ValueError):
    pass


class ConditionError(RCSError):
    """A scenario failed one of its defining inequalities.

    ``clause`` names the violated condition, e.g. ``"C2"``.
    """

    def __init__(self, msg, clause=None):
        super().__init__(msg)
        self.clause = clause
