"""Exception hierarchy.

Class names double as the error names reported by the CLI, so keep them stable.
Each base carries the process exit code the CLI maps it to.
"""


class RegretForgeError(Exception):
    exit_code = 1


class ValidationError(RegretForgeError, ValueError):
    exit_code = 2


class ResourceLimitError(RegretForgeError):
    exit_code = 3


class NumericError(RegretForgeError, ArithmeticError):
    exit_code = 4


# configuration
class BadHorizon(ValidationError):
    pass


class BadExpertCount(ValidationError):
    pass


class BadSchedule(ValidationError):
    pass


class NonMonotoneSchedule(ValidationError):
    pass


class BadDistribution(ValidationError):
    pass


class ScheduleDomainError(ValidationError):
    pass


class SerializationError(ValidationError):
    pass


# adversary construction
class OddWithoutSplit(ValidationError):
    pass


class EvenK(ValidationError):
    pass


class BadLength(ValidationError):
    pass


class TooShort(ValidationError):
    pass


class BadProbability(ValidationError):
    pass


class ParseError(ValidationError):
    pass


# evaluation
class LengthMismatch(ValidationError):
    pass


class ParityError(ValidationError):
    pass


class BadDelta(ValidationError):
    pass


class NonPositiveTolerance(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class BadBracket(ValidationError):
    pass


class InsufficientSamples(ValidationError):
    pass


class BadGrid(ValidationError):
    pass


class TooLarge(ResourceLimitError):
    pass


class NoConvergence(NumericError):
    pass


class NoRoot(NumericError):
    pass
