"""Exception hierarchy shared by all modules."""


class FeynmanGapError(Exception):
    """Base class for every error raised by this package."""


class InvalidGateError(FeynmanGapError, ValueError):
    """Gate with bad targets, wrong shape, or a non-unitary matrix."""


class InvalidStateError(FeynmanGapError, ValueError):
    """State vector of the wrong length, non-finite, or not normalized."""


class SectorMismatchError(FeynmanGapError):
    """A halting program was given to a non-halting analysis, or vice versa."""


class BudgetExhaustedError(FeynmanGapError):
    """The step budget ran out before the program emitted HALT."""


class DimensionCapError(FeynmanGapError):
    """Requested operator exceeds the configured dimension cap."""


class NotHermitianError(FeynmanGapError, ValueError):
    pass


class ConvergenceError(FeynmanGapError):
    pass


class OrthonormalityError(FeynmanGapError):
    """Ray trace states drifted too far from unit norm."""


class NoPeaksError(FeynmanGapError):
    pass


class EmptyWindowError(FeynmanGapError):
    pass


class ScheduleError(FeynmanGapError, ValueError):
    """Schedule could not be built from the given circuit or parameters."""


class LayoutError(FeynmanGapError, ValueError):
    """Local term refers to a site the layout does not have, or is too wide."""


class ProgramFormatError(FeynmanGapError, ValueError):
    """Circuit/program JSON that does not follow the documented schema."""
