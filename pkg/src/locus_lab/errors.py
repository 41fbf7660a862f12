"""Exception hierarchy shared by every module."""


class LocusError(Exception):
    """Base class for library errors."""


class DomainError(LocusError, ValueError):
    """A parameter or argument lies outside the admissible domain."""


class InvalidWordError(LocusError, ValueError):
    pass


class SharedPrefixError(InvalidWordError):
    """Two words that must differ in their first letter do not."""


class NormalizationError(LocusError, ValueError):
    """A series does not have constant coefficient 1."""


class ResourceLimitError(LocusError):
    pass


class PreconditionError(LocusError, ValueError):
    pass


class UnsupportedCaseError(LocusError):
    pass


class DegenerateHullError(LocusError):
    pass


class InconclusiveGapError(LocusError):
    """No attractor-free gap segment could be certified."""


class SolveFailure(LocusError):
    """The perturbation solver found no sign-change bracket."""


class MagnitudeError(SolveFailure):
    """The requested translation is too large for the chosen word length."""


class IncreaseDepthError(LocusError):
    """No short-hop chain exists at the requested depth."""


class TrapCheckFailure(LocusError):
    """A trap condition failed; ``condition`` names it, ``deficit`` says by how much."""

    def __init__(self, condition: str, deficit: float, message: str = ""):
        self.condition = condition
        self.deficit = deficit
        super().__init__(message or f"trap check {condition!r} failed by {deficit:.3g}")
