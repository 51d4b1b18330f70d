"""Exception types shared across the package."""


class FlowmapError(Exception):
    """Base class for all package errors."""


class VariableBindingError(FlowmapError):
    """A polynomial was evaluated or combined with a missing variable."""


class CompositionOverflowError(FlowmapError):
    """Symbolic composition exceeded the term cap (recoverable: iterate numerically)."""


class ProbabilityRangeError(FlowmapError):
    """A failure probability left [0, 1] by more than round-off."""


class EnumerationTooLargeError(FlowmapError):
    """A circuit has too many fallible locations for exhaustive enumeration."""


class DerivationInconsistencyError(FlowmapError):
    """Two independent derivations of the same map disagree."""


class FlowMapParseError(FlowmapError):
    """A flow-map document violates the schema."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(message if field is None else f"{field}: {message}")


class SettingError(FlowmapError):
    """A setting cannot be built for the requested variables."""


class NoPseudothresholdError(FlowmapError):
    """The scan range contained no sign change (reported, not fatal)."""

    def __init__(self, message: str, scan_lo: float = 0.0, scan_hi: float = 0.0):
        self.scan_lo = scan_lo
        self.scan_hi = scan_hi
        super().__init__(message)


class NonConvergenceError(FlowmapError):
    """An iterative solver hit its level or iteration cap before converging."""

    def __init__(self, message: str, last_values: tuple = ()):
        self.last_values = last_values
        super().__init__(message)
