"""Exception types raised by the library.

Every domain error derives from :class:`RandsumError`; the CLI reports the
class name as the machine-readable error code.
"""


class RandsumError(ValueError):
    """Base class for all domain errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


class EmptyWeights(RandsumError):
    pass


class NegativeWeight(RandsumError):
    pass


class NonFiniteWeight(RandsumError):
    pass


class ZeroTail(RandsumError):
    pass


class CapTooSmall(RandsumError):
    pass


class ExcessiveDeficit(RandsumError):
    pass


class SupportTooShort(RandsumError):
    pass


class DeficitDominatesWindow(RandsumError):
    pass


class NegativeX(RandsumError):
    pass


class SeriesTooShort(RandsumError):
    pass


class NoThresholdFound(RandsumError):
    pass


class SupportExceedsK(RandsumError):
    pass


class FileNotFound(RandsumError):
    pass


class ParseError(RandsumError):
    pass
