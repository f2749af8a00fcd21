"""Exception types raised across the package."""


class LatticeMismatchError(ValueError):
    """Two fields (or a grid and a lattice) do not share a resolution."""


class ZeroMeanError(ValueError):
    """A physical field carries a nonzero mean, which the lattice cannot hold."""


class SnapshotFormatError(ValueError):
    """A SPECFIELD file is malformed."""


class InadmissibleIndexError(ValueError):
    """A Sobolev index (or exponent) lies outside the range an estimate needs."""


class DegenerateFieldError(ValueError):
    """An audit was asked to normalise by the norm of a zero field."""


class BlowUpDetected(RuntimeError):
    """Non-finite coefficients appeared during time stepping."""

    def __init__(self, message, last_time=None):
        super().__init__(message)
        self.last_time = last_time


class CFLViolation(RuntimeError):
    """The advective CFL guard failed at a sample."""

    def __init__(self, message, trajectory=None, courant=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.courant = courant
