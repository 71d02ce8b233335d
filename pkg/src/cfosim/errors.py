"""Exception types shared across the simulator."""


class CfoSimError(Exception):
    """Base class for all simulator-specific failures."""


class OverlapError(CfoSimError):
    """CFO bound is large enough that adjacent user bands can overlap."""


class FrameError(CfoSimError):
    """Frame arithmetic is inconsistent (no room for data, pilot longer than slot, ...)."""


class PilotLengthError(CfoSimError):
    """Impulse-train pilot length does not tile into whole blocks, or has too few blocks."""


class InsufficientTrialsError(CfoSimError):
    """A Monte Carlo average was requested with too few trials to be meaningful."""


class DegenerateFitError(CfoSimError):
    """A log-log fit was attempted on data containing an exact zero."""


class AlphaSearchError(CfoSimError):
    """No grid exponent on the ladder satisfied the rate-saturation rule."""


class BracketError(CfoSimError):
    """Bisection bracket endpoints do not straddle the target value."""
