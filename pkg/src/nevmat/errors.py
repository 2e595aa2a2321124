"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end:
2 for configuration problems, 3 for numeric instability, 4 for domain errors.
"""


class NevmatError(Exception):
    exit_code = 1


class ConfigError(NevmatError):
    exit_code = 2


class ConfigParseError(ConfigError):
    pass


class NumericInstability(NevmatError):
    exit_code = 3


class TruncationUnstableError(NumericInstability):
    pass


class DensityUnstableError(NumericInstability):
    pass


class ProductOverflowError(NumericInstability):
    pass


class DomainError(NevmatError, ValueError):
    exit_code = 4


class NonPositiveLengthError(DomainError):
    pass


class DegenerateAngleStepError(DomainError):
    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"angle step {index} -> {index + 1} is 0 mod pi")


class IndexOrderError(DomainError):
    pass


class ZeroOffDiagonalError(DomainError):
    pass


class GaugeMismatchError(DomainError):
    pass


class NonPositiveBError(DomainError):
    pass


class BelowRangeError(DomainError):
    pass


class DivergentTailError(DomainError):
    pass


class IndexConstraintError(DomainError):
    pass


class RegimeMismatchError(DomainError):
    pass


class WindowTooSmallError(DomainError):
    pass


class NonPositiveLogLogError(DomainError):
    pass
