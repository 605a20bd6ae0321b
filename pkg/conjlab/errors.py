class ConjLabError(ValueError):
    """Base class for every error raised by conjlab"""


class ConfigError(ConjLabError):
    """Scenario or input could not be validated (exit status 1)"""


class DomainError(ConjLabError):
    """Valid input outside the mathematical domain of an operation (exit status 2)"""


# Configuration
class ConfigInvalid(ConfigError):
    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")


# Inputs to the numerical core
class InvalidCoefficients(DomainError):
    pass


class InvalidSimplexPoint(DomainError):
    pass


class InvalidMeasure(DomainError):
    pass


class InvalidSystem(DomainError):
    def __init__(self, message: str, index: int | None = None):
        self.index = index
        super().__init__(message if index is None else f"{message} (index {index})")


class InvalidGrid(DomainError):
    pass


class InvalidSchedule(DomainError):
    pass


# series / entropy
class NonPositiveRho(DomainError):
    pass


class RhoOutOfRange(DomainError):
    pass


class TruncationMismatch(DomainError):
    pass


class SeriesNotConvergent(DomainError):
    pass


class LengthMismatch(DomainError):
    pass


class TargetMeanOutOfRange(DomainError):
    pass


class EmptySchedule(DomainError):
    pass


# fenchel
class EmptyEffectiveDomain(DomainError):
    pass


class OutOfBox(DomainError):
    pass


# dynsys
class DimensionMismatch(DomainError):
    pass


class NonSquare(DomainError):
    pass


class NegativeEntry(DomainError):
    pass


class NotBijective(DomainError):
    pass


class RadiusNotSubcritical(DomainError):
    pass


# conjugate_theorem
class OracleFailure(DomainError):
    pass


class DomainViolation(DomainError):
    pass
