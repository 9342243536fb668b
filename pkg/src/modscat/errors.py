"""Exception types raised across the package."""


class ModscatError(Exception):
    pass


class GridError(ModscatError, ValueError):
    """Bad lattice parameters, or fields living on different lattices."""


class SpaceTagError(ModscatError, ValueError):
    """A physical-space field was passed where a frequency field is expected, or vice versa."""


class SingularTimeError(ModscatError, ValueError):
    """Operator evaluated at a time where it is undefined (M(0), D(0), ...)."""


class SupportError(ModscatError, ValueError):
    """A rescaling would push non-negligible mass or spectrum off the lattice."""


class FrameError(ModscatError, ValueError):
    """Pseudoconformal-frame time out of range, or stepping across tau = 1."""


class ScheduleError(ModscatError, ValueError):
    """Non-monotone times, too few checkpoints, accumulator/time mismatch."""


class ConfigError(ModscatError, ValueError):
    pass


class InvariantViolation(ModscatError):
    """Raised by the evolution loop when a monitored invariant breaks.

    ``last_record`` carries the last diagnostic that passed all checks.
    """

    def __init__(self, invariant, message, last_record=None):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant
        self.last_record = last_record
